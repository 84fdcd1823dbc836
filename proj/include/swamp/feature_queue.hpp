#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "swamp/matrix.hpp"

namespace swamp {

// Bounded FIFO of paired embedding rows. Rows from the two modalities stay
// index-aligned; pushing past capacity evicts the oldest pairs first. Stored
// rows are plain value snapshots with no gradient linkage.
class FeatureQueue {
 public:
  FeatureQueue(std::size_t capacity, std::size_t dim);

  // Appends one minibatch of aligned pairs.
  void push(const Matrix& rows_a, const Matrix& rows_b);

  struct Snapshot {
    Matrix a;  // N x d, FIFO order (oldest first)
    Matrix b;
    std::vector<std::uint32_t> minibatch_rows;  // rows holding the latest push
  };
  Snapshot snapshot() const;

  std::size_t size() const { return count_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t dim() const { return dim_; }

 private:
  std::size_t capacity_;
  std::size_t dim_;
  Matrix buf_a_;  // capacity x d ring storage
  Matrix buf_b_;
  std::size_t head_ = 0;   // index of the oldest stored row
  std::size_t count_ = 0;  // stored rows
  std::size_t last_push_retained_ = 0;
};

}  // namespace swamp
