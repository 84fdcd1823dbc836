#include "swamp/retrieval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

namespace swamp {

std::string to_string(Direction d) { return d == Direction::kAToB ? "a2b" : "b2a"; }

std::string to_string(RetrievalErrorType e) {
  return e == RetrievalErrorType::kPair ? "pair" : "class";
}

std::vector<std::vector<std::uint32_t>> rank_matrix(const Matrix& queries,
                                                    const Matrix& gallery) {
  if (queries.cols() != gallery.cols()) {
    throw ShapeError(fmt::format("rank_matrix: dim mismatch, queries {} vs gallery {}",
                                 queries.shape_str(), gallery.shape_str()));
  }
  const std::size_t g = gallery.rows();
  std::vector<std::vector<std::uint32_t>> out(queries.rows());
  std::vector<double> sims(g);
  for (std::size_t qi = 0; qi < queries.rows(); ++qi) {
    const double* qrow = queries.data() + qi * queries.cols();
    for (std::size_t gi = 0; gi < g; ++gi) {
      const double* grow = gallery.data() + gi * gallery.cols();
      double acc = 0.0;
      for (std::size_t d = 0; d < queries.cols(); ++d) acc += qrow[d] * grow[d];
      sims[gi] = acc;
    }
    std::vector<std::uint32_t>& order = out[qi];
    order.resize(g);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&sims](std::uint32_t a, std::uint32_t b) {
      if (sims[a] != sims[b]) return sims[a] > sims[b];
      return a < b;
    });
  }
  return out;
}

namespace {

RetrievalReport report_from_ranks(std::vector<std::uint32_t> true_ranks,
                                  RetrievalErrorType error_type) {
  RetrievalReport report;
  report.error_type = error_type;
  report.n_queries = true_ranks.size();
  if (true_ranks.empty()) return report;
  std::size_t hit1 = 0, hit5 = 0, hit10 = 0;
  for (std::uint32_t r : true_ranks) {
    hit1 += r <= 1;
    hit5 += r <= 5;
    hit10 += r <= 10;
  }
  const double pct = 100.0 / static_cast<double>(true_ranks.size());
  report.r_at_1 = pct * static_cast<double>(hit1);
  report.r_at_5 = pct * static_cast<double>(hit5);
  report.r_at_10 = pct * static_cast<double>(hit10);
  std::sort(true_ranks.begin(), true_ranks.end());
  report.median_rank =
      static_cast<double>(true_ranks[(true_ranks.size() - 1) / 2]);  // lower median
  return report;
}

}  // namespace

RetrievalReport score_pairs(const std::vector<std::vector<std::uint32_t>>& ranks,
                            std::span<const std::uint32_t> pair_index) {
  if (ranks.size() != pair_index.size()) {
    throw ShapeError(fmt::format("score_pairs: {} queries but {} truth entries",
                                 ranks.size(), pair_index.size()));
  }
  std::vector<std::uint32_t> true_ranks(ranks.size());
  for (std::size_t q = 0; q < ranks.size(); ++q) {
    const auto& order = ranks[q];
    const auto it = std::find(order.begin(), order.end(), pair_index[q]);
    if (it == order.end()) {
      throw ShapeError(fmt::format("score_pairs: pair index {} absent from gallery",
                                   pair_index[q]));
    }
    true_ranks[q] = static_cast<std::uint32_t>(it - order.begin()) + 1;
  }
  return report_from_ranks(std::move(true_ranks), RetrievalErrorType::kPair);
}

RetrievalReport score_classes(const std::vector<std::vector<std::uint32_t>>& ranks,
                              std::span<const std::int32_t> query_labels,
                              std::span<const std::int32_t> gallery_labels) {
  if (ranks.size() != query_labels.size()) {
    throw ShapeError(fmt::format("score_classes: {} queries but {} labels",
                                 ranks.size(), query_labels.size()));
  }
  std::vector<std::uint32_t> true_ranks(ranks.size());
  for (std::size_t q = 0; q < ranks.size(); ++q) {
    const auto& order = ranks[q];
    std::uint32_t rank = 0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (gallery_labels[order[pos]] == query_labels[q]) {
        rank = static_cast<std::uint32_t>(pos) + 1;
        break;
      }
    }
    if (rank == 0) {
      throw ShapeError(fmt::format(
          "score_classes: no gallery item of class {} for query {}", query_labels[q], q));
    }
    true_ranks[q] = rank;
  }
  return report_from_ranks(std::move(true_ranks), RetrievalErrorType::kClass);
}

std::uint32_t rank_of_item(const Matrix& similarities, std::size_t query_row,
                           std::size_t truth) {
  const double* row = similarities.data() + query_row * similarities.cols();
  const double s_true = row[truth];
  std::uint32_t rank = 1;
  for (std::size_t j = 0; j < similarities.cols(); ++j) {
    if (j == truth) continue;
    if (row[j] > s_true || (row[j] == s_true && j < truth)) ++rank;
  }
  return rank;
}

double pair_r_at_1_percent(const Matrix& similarities) {
  if (similarities.rows() != similarities.cols()) {
    throw ShapeError("pair_r_at_1_percent: similarity matrix must be square");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < similarities.rows(); ++i) {
    if (rank_of_item(similarities, i, i) == 1) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(similarities.rows());
}

}  // namespace swamp
