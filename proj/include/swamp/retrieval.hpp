#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swamp/matrix.hpp"

namespace swamp {

enum class Direction { kAToB, kBToA };
enum class RetrievalErrorType { kPair, kClass };

std::string to_string(Direction d);
std::string to_string(RetrievalErrorType e);

struct RetrievalReport {
  Direction direction = Direction::kAToB;
  RetrievalErrorType error_type = RetrievalErrorType::kPair;
  double r_at_1 = 0.0;  // percentages
  double r_at_5 = 0.0;
  double r_at_10 = 0.0;
  double median_rank = 0.0;  // lower median of the true-item ranks
  std::size_t n_queries = 0;
};

// For each query row, gallery indices sorted by descending cosine; ties break
// to the ascending gallery index. Inputs must be row-normalized.
std::vector<std::vector<std::uint32_t>> rank_matrix(const Matrix& queries,
                                                    const Matrix& gallery);

// Pair-based scoring: query i's true gallery item is pair_index[i].
RetrievalReport score_pairs(const std::vector<std::vector<std::uint32_t>>& ranks,
                            std::span<const std::uint32_t> pair_index);

// Class-based scoring: the first gallery item sharing the query's label counts.
RetrievalReport score_classes(const std::vector<std::vector<std::uint32_t>>& ranks,
                              std::span<const std::int32_t> query_labels,
                              std::span<const std::int32_t> gallery_labels);

// 1-based rank of gallery item `truth` for query row q of the similarity
// matrix, under the same descending-cosine / ascending-index order as
// rank_matrix but without materializing the sort. Used on the per-epoch
// validation path.
std::uint32_t rank_of_item(const Matrix& similarities, std::size_t query_row,
                           std::size_t truth);

// Fraction (percent) of aligned queries whose own row ranks first.
double pair_r_at_1_percent(const Matrix& similarities);

}  // namespace swamp
