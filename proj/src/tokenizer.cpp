#include "semparse/tokenizer.hpp"

#include <algorithm>
#include <fstream>

#include "semparse/error.hpp"
#include "semparse/meaning_repr.hpp"

namespace semparse {

namespace {

const char* const kReserved[] = {"<pad>", "<bos>", "<eos>", "<unk>"};

std::filesystem::path atomic_sidecar(const std::filesystem::path& path) {
  auto p = path;
  p += ".atomic";
  return p;
}

}  // namespace

Vocabulary::Vocabulary() : first_atomic_(kNumReserved) {
  for (const char* s : kReserved) append(s);
}

TokenId Vocabulary::append(std::string surface) {
  const auto id = static_cast<TokenId>(surfaces_.size());
  index_.emplace(surface, id);
  surfaces_.push_back(std::move(surface));
  return id;
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus) {
  Vocabulary vocab;
  for (const auto& line : corpus) {
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && is_space(line[pos])) ++pos;
      const std::size_t start = pos;
      while (pos < line.size() && !is_space(line[pos])) ++pos;
      if (pos == start) continue;
      std::string word = line.substr(start, pos - start);
      if (!vocab.index_.contains(word)) vocab.append(std::move(word));
    }
  }
  vocab.first_atomic_ = static_cast<TokenId>(vocab.size());
  return vocab;
}

TokenId Vocabulary::add_atomic_token(std::string surface) {
  if (surface.empty()) throw Error(Errc::InvalidArgument, "empty atomic token");
  if (index_.contains(surface)) throw Error(Errc::DuplicateSurface, surface);
  if (atomic_by_length_.empty()) first_atomic_ = static_cast<TokenId>(size());
  const TokenId id = append(std::move(surface));
  atomic_by_length_.push_back(id);
  std::stable_sort(atomic_by_length_.begin(), atomic_by_length_.end(),
                   [&](TokenId a, TokenId b) { return surfaces_[a].size() > surfaces_[b].size(); });
  return id;
}

TokenSeq Vocabulary::encode(std::string_view text) const {
  TokenSeq out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size()) break;
    // An atomic surface may span spaces, so try those before splitting a word.
    bool matched = false;
    for (TokenId id : atomic_by_length_) {
      const std::string& s = surfaces_[id];
      const std::size_t end = pos + s.size();
      if (end <= text.size() && text.compare(pos, s.size(), s) == 0 && (end == text.size() || is_space(text[end]))) {
        out.push_back(id);
        pos = end;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    const std::size_t start = pos;
    while (pos < text.size() && !is_space(text[pos])) ++pos;
    const auto it = index_.find(std::string(text.substr(start, pos - start)));
    out.push_back(it == index_.end() || it->second < kNumReserved ? kUnk : it->second);
  }
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= size()) {
      throw Error(Errc::IdOutOfRange, "token id " + std::to_string(id) + " outside vocabulary of size " +
                                          std::to_string(size()));
    }
    if (id < kNumReserved) continue;
    if (!out.empty()) out += ' ';
    out += surfaces_[id];
  }
  return out;
}

const std::string& Vocabulary::surface(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= size()) {
    throw Error(Errc::IdOutOfRange, "token id " + std::to_string(id));
  }
  return surfaces_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
  const auto it = index_.find(std::string(surface));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write vocabulary " + path.string());
  for (const auto& s : surfaces_) out << s << '\n';
  const auto sidecar = atomic_sidecar(path);
  if (first_atomic_ < static_cast<TokenId>(size())) {
    std::ofstream side(sidecar, std::ios::binary);
    side << first_atomic_ << '\n';
  } else {
    std::error_code ec;
    std::filesystem::remove(sidecar, ec);
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open vocabulary " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < static_cast<std::size_t>(kNumReserved)) {
    throw Error(Errc::MalformedRecord, "vocabulary shorter than the reserved block", lines.size());
  }
  for (TokenId i = 0; i < kNumReserved; ++i) {
    if (lines[i] != kReserved[i]) throw Error(Errc::MalformedRecord, "unexpected reserved surface", i + 1);
  }
  TokenId first_atomic = static_cast<TokenId>(lines.size());
  if (std::ifstream side(atomic_sidecar(path)); side) side >> first_atomic;

  Vocabulary vocab;
  for (std::size_t i = kNumReserved; i < lines.size(); ++i) {
    if (static_cast<TokenId>(i) >= first_atomic) {
      vocab.add_atomic_token(lines[i]);
    } else {
      if (vocab.index_.contains(lines[i])) throw Error(Errc::DuplicateSurface, lines[i], i + 1);
      vocab.append(lines[i]);
      vocab.first_atomic_ = static_cast<TokenId>(vocab.size());
    }
  }
  return vocab;
}

std::string space_brackets(std::string_view target) {
  std::string out;
  out.reserve(target.size() + 16);
  for (std::size_t i = 0; i < target.size(); ++i) {
    out += target[i];
    if (target[i] == '[' && i + 1 < target.size() && !is_space(target[i + 1])) out += ' ';
  }
  return out;
}

std::string join_brackets(std::string_view spaced) {
  std::string out;
  out.reserve(spaced.size());
  for (std::size_t i = 0; i < spaced.size(); ++i) {
    out += spaced[i];
    if (spaced[i] == '[' && i + 1 < spaced.size() && spaced[i + 1] == ' ') ++i;
  }
  return out;
}

}  // namespace semparse
