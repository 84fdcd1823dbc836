#include "swamp/feature_queue.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstring>

namespace swamp {

FeatureQueue::FeatureQueue(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), buf_a_(capacity, dim), buf_b_(capacity, dim) {}

void FeatureQueue::push(const Matrix& rows_a, const Matrix& rows_b) {
  if (rows_a.rows() != rows_b.rows()) {
    throw ShapeError(fmt::format("FeatureQueue::push: modality row counts differ, {} vs {}",
                                 rows_a.rows(), rows_b.rows()));
  }
  if (rows_a.cols() != dim_ || rows_b.cols() != dim_) {
    throw ShapeError(fmt::format("FeatureQueue::push: dim mismatch, queue holds {}, got {}/{}",
                                 dim_, rows_a.cols(), rows_b.cols()));
  }
  const std::size_t batch = rows_a.rows();
  if (batch > capacity_) {
    throw ShapeError(fmt::format(
        "FeatureQueue::push: batch of {} exceeds queue capacity {}", batch, capacity_));
  }
  for (std::size_t r = 0; r < batch; ++r) {
    const std::size_t slot = (head_ + count_) % capacity_;
    std::copy_n(rows_a.data() + r * dim_, dim_, buf_a_.data() + slot * dim_);
    std::copy_n(rows_b.data() + r * dim_, dim_, buf_b_.data() + slot * dim_);
    if (count_ < capacity_) {
      ++count_;
    } else {
      head_ = (head_ + 1) % capacity_;  // oldest pair evicted
    }
  }
  last_push_retained_ = std::min(batch, capacity_);
}

FeatureQueue::Snapshot FeatureQueue::snapshot() const {
  if (count_ == 0) {
    throw ShapeError("FeatureQueue::snapshot: queue is empty");
  }
  Snapshot snap;
  snap.a = Matrix(count_, dim_);
  snap.b = Matrix(count_, dim_);
  for (std::size_t r = 0; r < count_; ++r) {
    const std::size_t slot = (head_ + r) % capacity_;
    std::copy_n(buf_a_.data() + slot * dim_, dim_, snap.a.data() + r * dim_);
    std::copy_n(buf_b_.data() + slot * dim_, dim_, snap.b.data() + r * dim_);
  }
  snap.minibatch_rows.resize(last_push_retained_);
  for (std::size_t r = 0; r < last_push_retained_; ++r) {
    snap.minibatch_rows[r] =
        static_cast<std::uint32_t>(count_ - last_push_retained_ + r);
  }
  return snap;
}

}  // namespace swamp
