/*
 * Copyright 2026 The MFRC Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mfrc/error.hpp"
#include "mfrc/random.hpp"
#include "mfrc/text.hpp"

namespace mfrc {

using Index = std::uint32_t;
using ExternalId = std::int64_t;

struct RatingTriple {
  Index user = 0;
  Index item = 0;
  double rating = 0.0;

  friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

struct RatingScale {
  double min = 1.0;
  double max = 5.0;

  bool contains(double r) const noexcept { return r >= min && r <= max; }
  double clip(double r) const noexcept { return std::clamp(r, min, max); }

  friend bool operator==(const RatingScale&, const RatingScale&) = default;
};

/// Bijection between external ids (as found in the source file) and dense
/// 0-based internal ids.
class IdMap {
 public:
  IdMap() = default;

  explicit IdMap(std::vector<ExternalId> externals) : external_(std::move(externals)) {
    internal_.reserve(external_.size());
    for (std::size_t i = 0; i < external_.size(); ++i) {
      if (!internal_.emplace(external_[i], static_cast<Index>(i)).second)
        throw DataError("id map is not bijective: external id " +
                        std::to_string(external_[i]) + " repeated");
    }
  }

  static IdMap identity(std::size_t n) {
    std::vector<ExternalId> ext(n);
    std::iota(ext.begin(), ext.end(), ExternalId{0});
    return IdMap(std::move(ext));
  }

  std::size_t size() const noexcept { return external_.size(); }
  ExternalId external(Index internal) const { return external_.at(internal); }

  std::optional<Index> internal(ExternalId external) const {
    auto it = internal_.find(external);
    if (it == internal_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<ExternalId> external_;
  std::unordered_map<ExternalId, Index> internal_;
};

struct IdMaps {
  IdMap users;
  IdMap items;
};

/// Immutable sparse rating matrix held as a triple list with per-user and
/// per-item position buckets (CSR-style offsets into a position array).
class RatingDataset {
 public:
  RatingDataset() : RatingDataset({}, 0, 0, RatingScale{}) {}

  /// Validates every invariant; throws DataError on violation.
  RatingDataset(std::vector<RatingTriple> triples, std::size_t num_users, std::size_t num_items,
                RatingScale scale, std::shared_ptr<const IdMaps> ids = nullptr)
      : triples_(std::move(triples)),
        num_users_(num_users),
        num_items_(num_items),
        scale_(scale),
        ids_(std::move(ids)) {
    if (!(scale_.min <= scale_.max)) throw DataError("rating scale min exceeds max");
    if (!ids_) {
      ids_ = std::make_shared<const IdMaps>(
          IdMaps{IdMap::identity(num_users_), IdMap::identity(num_items_)});
    }
    if (ids_->users.size() != num_users_ || ids_->items.size() != num_items_)
      throw DataError("id map sizes do not match dataset dimensions");
    for (std::size_t pos = 0; pos < triples_.size(); ++pos) {
      const auto& t = triples_[pos];
      if (t.user >= num_users_ || t.item >= num_items_)
        throw DataError("triple " + std::to_string(pos) + " has id out of range");
      if (!scale_.contains(t.rating))
        throw DataError("triple " + std::to_string(pos) + " has rating " +
                        text::format_double(t.rating) + " outside scale [" +
                        text::format_double(scale_.min) + ", " +
                        text::format_double(scale_.max) + "]");
    }
    build_index(num_users_, [](const RatingTriple& t) { return t.user; }, user_offsets_,
                user_positions_);
    build_index(num_items_, [](const RatingTriple& t) { return t.item; }, item_offsets_,
                item_positions_);
    check_duplicates();
  }

  std::span<const RatingTriple> triples() const noexcept { return triples_; }
  std::size_t size() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return triples_.empty(); }
  std::size_t num_users() const noexcept { return num_users_; }
  std::size_t num_items() const noexcept { return num_items_; }
  const RatingScale& scale() const noexcept { return scale_; }
  const IdMaps& ids() const noexcept { return *ids_; }
  std::shared_ptr<const IdMaps> shared_ids() const noexcept { return ids_; }

  /// Positions (into triples()) of user u's ratings, in triple order.
  std::span<const std::size_t> user_positions(Index u) const {
    return {user_positions_.data() + user_offsets_[u], user_offsets_[u + 1] - user_offsets_[u]};
  }
  std::span<const std::size_t> item_positions(Index i) const {
    return {item_positions_.data() + item_offsets_[i], item_offsets_[i + 1] - item_offsets_[i]};
  }
  std::size_t user_count(Index u) const { return user_offsets_[u + 1] - user_offsets_[u]; }
  std::size_t item_count(Index i) const { return item_offsets_[i + 1] - item_offsets_[i]; }

  /// New dataset over the same id space holding triples at `positions`.
  RatingDataset subset(std::span<const std::size_t> positions) const {
    std::vector<RatingTriple> out;
    out.reserve(positions.size());
    for (std::size_t p : positions) out.push_back(triples_.at(p));
    return RatingDataset(std::move(out), num_users_, num_items_, scale_, ids_);
  }

 private:
  template <class Key>
  void build_index(std::size_t buckets, Key key, std::vector<std::size_t>& offsets,
                   std::vector<std::size_t>& positions) const {
    offsets.assign(buckets + 1, 0);
    for (const auto& t : triples_) ++offsets[key(t) + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    positions.resize(triples_.size());
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (std::size_t pos = 0; pos < triples_.size(); ++pos)
      positions[cursor[key(triples_[pos])]++] = pos;
  }

  void check_duplicates() const {
    std::vector<Index> seen;
    for (Index u = 0; u < num_users_; ++u) {
      seen.clear();
      for (std::size_t p : user_positions(u)) seen.push_back(triples_[p].item);
      std::sort(seen.begin(), seen.end());
      auto dup = std::adjacent_find(seen.begin(), seen.end());
      if (dup != seen.end())
        throw DataError("duplicate rating for (user " +
                        std::to_string(ids_->users.external(u)) + ", item " +
                        std::to_string(ids_->items.external(*dup)) + ")");
    }
  }

  std::vector<RatingTriple> triples_;
  std::size_t num_users_;
  std::size_t num_items_;
  RatingScale scale_;
  std::shared_ptr<const IdMaps> ids_;
  std::vector<std::size_t> user_offsets_, user_positions_;
  std::vector<std::size_t> item_offsets_, item_positions_;
};

enum class DatasetFormat { ml_100k, ml_1m };

inline std::string to_string(DatasetFormat f) {
  return f == DatasetFormat::ml_100k ? "ml-100k" : "ml-1m";
}

inline DatasetFormat parse_dataset_format(std::string_view s) {
  if (s == "ml-100k") return DatasetFormat::ml_100k;
  if (s == "ml-1m") return DatasetFormat::ml_1m;
  throw ConfigError("unknown dataset format '" + std::string(s) + "' (expected ml-100k or ml-1m)");
}

/// Both MovieLens releases rate on integer stars 1..5.
inline RatingScale declared_scale(DatasetFormat) { return RatingScale{1.0, 5.0}; }

namespace detail {

struct RawRating {
  ExternalId user;
  ExternalId item;
  double rating;
};

inline std::vector<RawRating> read_raw(std::istream& in, const std::string& source,
                                       DatasetFormat format) {
  const std::string_view sep = format == DatasetFormat::ml_100k ? "\t" : "::";
  std::vector<RawRating> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = text::strip_cr(line);
    if (view.empty()) continue;
    const auto fields = text::split(view, sep);
    if (fields.size() != 4)
      throw ParseError(source, line_no,
                       "expected 4 fields separated by '" +
                           std::string(format == DatasetFormat::ml_100k ? "\\t" : "::") +
                           "', got " + std::to_string(fields.size()));
    const auto user = text::parse_int<ExternalId>(fields[0]);
    const auto item = text::parse_int<ExternalId>(fields[1]);
    const auto rating = text::parse_double(fields[2]);
    const auto stamp = text::parse_int<std::int64_t>(fields[3]);
    if (!user) throw ParseError(source, line_no, "bad user id '" + std::string(fields[0]) + "'");
    if (!item) throw ParseError(source, line_no, "bad item id '" + std::string(fields[1]) + "'");
    if (!rating || !std::isfinite(*rating))
      throw ParseError(source, line_no, "bad rating '" + std::string(fields[2]) + "'");
    if (!stamp) throw ParseError(source, line_no, "bad timestamp '" + std::string(fields[3]) + "'");
    if (!declared_scale(format).contains(*rating))
      throw ParseError(source, line_no,
                       "rating " + std::string(fields[2]) + " outside declared scale [1, 5]");
    raw.push_back({*user, *item, *rating});
  }
  return raw;
}

}  // namespace detail

/// Parses a MovieLens rating stream; timestamps are dropped. MovieLens ids
/// are positive integers, and external id x maps to internal id x - 1 over
/// the full range 1..max, so ids that never occur become empty rows/columns
/// (ml-1m declares 3,952 movies of which 3,706 are rated).
inline RatingDataset ingest(std::istream& in, DatasetFormat format,
                            const std::string& source = "<stream>") {
  const auto raw = detail::read_raw(in, source, format);
  ExternalId max_user = 0, max_item = 0;
  for (std::size_t n = 0; n < raw.size(); ++n) {
    if (raw[n].user < 1 || raw[n].item < 1)
      throw DataError(source + ": MovieLens ids must be positive (rating " +
                      std::to_string(n + 1) + ")");
    max_user = std::max(max_user, raw[n].user);
    max_item = std::max(max_item, raw[n].item);
  }
  auto range = [](ExternalId max) {
    std::vector<ExternalId> ids(static_cast<std::size_t>(max));
    std::iota(ids.begin(), ids.end(), ExternalId{1});
    return IdMap(std::move(ids));
  };
  auto ids = std::make_shared<IdMaps>(IdMaps{range(max_user), range(max_item)});
  std::vector<RatingTriple> triples;
  triples.reserve(raw.size());
  for (const auto& r : raw)
    triples.push_back({static_cast<Index>(r.user - 1), static_cast<Index>(r.item - 1), r.rating});
  const std::size_t m = ids->users.size();
  const std::size_t n = ids->items.size();
  return RatingDataset(std::move(triples), m, n, declared_scale(format), std::move(ids));
}

inline RatingDataset ingest(const std::string& path, DatasetFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rating file '" + path + "'");
  return ingest(in, format, path);
}

/// 1 - |R| / (m n).
inline double sparsity(const RatingDataset& ds) {
  if (ds.num_users() == 0 || ds.num_items() == 0)
    throw DataError("sparsity is undefined for a dataset with no users or items");
  return 1.0 - static_cast<double>(ds.size()) /
                   (static_cast<double>(ds.num_users()) * static_cast<double>(ds.num_items()));
}

inline double global_mean(const RatingDataset& ds) {
  if (ds.empty()) throw DataError("global mean of an empty dataset");
  double sum = 0.0;
  for (const auto& t : ds.triples()) sum += t.rating;
  return sum / static_cast<double>(ds.size());
}

struct SplitPair {
  RatingDataset train;
  RatingDataset test;
  double ratio = 0.8;
  std::uint64_t seed = 0;
};

/// Seeded uniform partition: the first round(ratio * |R|) positions of a
/// shuffled permutation go to train. Both halves keep source triple order.
inline SplitPair split(const RatingDataset& ds, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("split ratio must lie in (0, 1), got " + text::format_double(ratio));
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(mix_seed(seed, 0x5b11));
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(ds.size())));
  std::vector<std::size_t> train_pos(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test_pos(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train_pos.begin(), train_pos.end());
  std::sort(test_pos.begin(), test_pos.end());
  return SplitPair{ds.subset(train_pos), ds.subset(test_pos), ratio, seed};
}

// Canonical interchange: CSV `user,item,rating` over internal ids.

inline void write_csv(std::ostream& out, const RatingDataset& ds) {
  out << "user,item,rating\n";
  for (const auto& t : ds.triples())
    out << t.user << ',' << t.item << ',' << text::format_double(t.rating) << '\n';
}

inline void write_csv(const std::string& path, const RatingDataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_csv(out, ds);
  if (!out) throw IoError("write to '" + path + "' failed");
}

/// Reads the interchange CSV. Dimensions default to max id + 1 and may be
/// widened by the caller (e.g. to a training set's dimensions).
inline RatingDataset read_csv(std::istream& in, RatingScale scale = {},
                              const std::string& source = "<stream>", std::size_t min_users = 0,
                              std::size_t min_items = 0) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || text::strip_cr(line) != "user,item,rating")
    throw ParseError(source, 1, "expected header 'user,item,rating'");
  std::vector<RatingTriple> triples;
  std::size_t m = min_users, n = min_items;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = text::strip_cr(line);
    if (view.empty()) continue;
    const auto fields = text::split(view, ",");
    if (fields.size() != 3) throw ParseError(source, line_no, "expected 3 comma-separated fields");
    const auto u = text::parse_int<Index>(fields[0]);
    const auto i = text::parse_int<Index>(fields[1]);
    const auto r = text::parse_double(fields[2]);
    if (!u || !i || !r || !std::isfinite(*r)) throw ParseError(source, line_no, "malformed triple");
    if (!scale.contains(*r))
      throw ParseError(source, line_no, "rating " + std::string(fields[2]) + " outside scale");
    triples.push_back({*u, *i, *r});
    m = std::max<std::size_t>(m, std::size_t{*u} + 1);
    n = std::max<std::size_t>(n, std::size_t{*i} + 1);
  }
  return RatingDataset(std::move(triples), m, n, scale);
}

inline RatingDataset read_csv(const std::string& path, RatingScale scale = {},
                              std::size_t min_users = 0, std::size_t min_items = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_csv(in, scale, path, min_users, min_items);
}

}  // namespace mfrc
