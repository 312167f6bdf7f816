#include "semparse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <tuple>

#include "semparse/error.hpp"

namespace semparse {

namespace {

std::optional<std::string> gold_form(const std::string& gold, const CanonScheme& scheme) {
  try {
    ParseTree tree = parse_top(gold);
    return serialize(scheme.simplifies() ? simplify(tree) : tree);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<std::string> prediction_form(const std::string& prediction, const CanonScheme& scheme,
                                           const LabelTable* table) {
  try {
    ParseTree tree = table ? decanonicalize(prediction, scheme, *table) : decanonicalize(prediction, scheme);
    return serialize(scheme.simplifies() ? simplify(tree) : tree);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string key_of(const RunResult& r, ResultField f) {
  switch (f) {
    case ResultField::Domain: return r.domain;
    case ResultField::Scheme: return r.scheme;
    case ResultField::Tuning: return r.tuning;
    case ResultField::Decoding: return r.decoding;
    case ResultField::Seed: return std::to_string(r.seed);
  }
  return {};
}

}  // namespace

MatchResult exact_match(std::span<const std::string> predictions, std::span<const std::string> golds,
                        const CanonScheme& scheme, const LabelTable* table) {
  if (predictions.size() != golds.size()) {
    throw Error(Errc::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                          std::to_string(golds.size()) + " golds");
  }
  if (scheme.substitutes_labels() && table == nullptr) {
    throw Error(Errc::InvalidArgument, "scheme " + scheme.tag() + " needs a label table");
  }
  MatchResult out;
  out.n = golds.size();
  out.flags.reserve(out.n);
  for (std::size_t i = 0; i < golds.size(); ++i) {
    bool hit;
    if (auto gold = gold_form(golds[i], scheme)) {
      const auto pred = prediction_form(predictions[i], scheme, table);
      hit = pred && *pred == *gold;
    } else {
      hit = normalize_ws(predictions[i]) == normalize_ws(golds[i]);
    }
    out.flags.push_back(hit);
    if (hit) ++out.matches;
  }
  return out;
}

std::string_view field_name(ResultField f) {
  switch (f) {
    case ResultField::Domain: return "domain";
    case ResultField::Scheme: return "scheme";
    case ResultField::Tuning: return "tuning";
    case ResultField::Decoding: return "decoding";
    case ResultField::Seed: return "seed";
  }
  return "";
}

ResultField parse_field(std::string_view name) {
  for (auto f : {ResultField::Domain, ResultField::Scheme, ResultField::Tuning, ResultField::Decoding,
                 ResultField::Seed}) {
    if (field_name(f) == name) return f;
  }
  throw Error(Errc::InvalidArgument, "unknown result field '" + std::string(name) + "'");
}

std::vector<AggregateRow> aggregate(std::span<const RunResult> results, std::span<const ResultField> group_by) {
  std::map<std::vector<std::string>, std::vector<double>> groups;
  for (const auto& r : results) {
    std::vector<std::string> key;
    for (auto f : group_by) key.push_back(key_of(r, f));
    groups[key].push_back(r.accuracy());
  }
  std::vector<AggregateRow> rows;
  for (const auto& [key, values] : groups) {
    AggregateRow row{key, 0.0, std::nullopt, values.size()};
    double sum = 0.0;
    for (double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - row.mean) * (v - row.mean);
      row.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string results_csv(std::span<const RunResult> results) {
  std::vector<RunResult> sorted(results.begin(), results.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const RunResult& a, const RunResult& b) {
    return std::tie(a.domain, a.scheme, a.tuning, a.decoding, a.seed) <
           std::tie(b.domain, b.scheme, b.tuning, b.decoding, b.seed);
  });
  std::string out = "domain,scheme,tuning,decoding,seed,n,accuracy\n";
  for (const auto& r : sorted) {
    out += r.domain + "," + r.scheme + "," + r.tuning + "," + r.decoding + "," + std::to_string(r.seed) + "," +
           std::to_string(r.n) + "," + fixed4(r.accuracy()) + "\n";
  }
  return out;
}

std::string aggregate_csv(std::span<const AggregateRow> rows, std::span<const ResultField> group_by) {
  std::string out;
  for (auto f : group_by) {
    out += field_name(f);
    out += ',';
  }
  out += "mean,std,n\n";
  for (const auto& row : rows) {
    for (const auto& k : row.key) out += k + ",";
    out += fixed4(row.mean) + "," + (row.std ? fixed4(*row.std) : std::string("NA")) + "," + std::to_string(row.n) +
           "\n";
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << text;
}

}  // namespace semparse
