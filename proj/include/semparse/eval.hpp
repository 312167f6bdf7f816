#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semparse/canonicalize.hpp"

namespace semparse {

struct MatchResult {
  std::size_t matches = 0;
  std::size_t n = 0;
  std::vector<bool> flags;

  double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(n); }
};

/// Compares predictions (target space of `scheme`) against gold meanings.
/// Both sides are mapped into meaning space (simplified when the scheme
/// simplifies) and serialized; a prediction that cannot be mapped counts as
/// a miss. Golds that are not TOP trees are compared as whitespace-normalized
/// strings. `table` may be null when the scheme substitutes no labels.
MatchResult exact_match(std::span<const std::string> predictions, std::span<const std::string> golds,
                        const CanonScheme& scheme, const LabelTable* table);

struct RunResult {
  std::string domain;
  std::string scheme;
  std::string tuning;
  std::string decoding;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t matches = 0;

  double accuracy() const { return n == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(n); }
  bool operator==(const RunResult&) const = default;
};

enum class ResultField { Domain, Scheme, Tuning, Decoding, Seed };

std::string_view field_name(ResultField f);
ResultField parse_field(std::string_view name);

struct AggregateRow {
  std::vector<std::string> key;  // one value per group-by field
  double mean = 0.0;
  std::optional<double> std;     // sample std; absent for a single run
  std::size_t n = 0;
};

/// Mean and sample standard deviation of accuracy per group, rows sorted by key.
std::vector<AggregateRow> aggregate(std::span<const RunResult> results, std::span<const ResultField> group_by);

/// Header domain,scheme,tuning,decoding,seed,n,accuracy; rows sorted by
/// (domain, scheme, tuning, decoding, seed); accuracy with 4 decimals.
std::string results_csv(std::span<const RunResult> results);
/// Group columns followed by mean,std,n; a missing std is written as "NA".
std::string aggregate_csv(std::span<const AggregateRow> rows, std::span<const ResultField> group_by);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace semparse
