// Copyright 2026 The Pilotlet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pilotlet/bench/kmeans.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"

namespace pilotlet::bench {

namespace {

uint64_t Mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string Real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string_view> Fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T Num(std::string_view field, const std::string &where) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kMalformedInput,
                where + ": '" + std::string(field) + "' is not a number");
  }
  return value;
}

std::vector<std::string> ContentLines(const std::string &text) {
  std::vector<std::string> out;
  for (auto &line : SplitLines(text)) {
    if (!Trim(line).empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

std::string KMeansScenario::Label() const {
  return "n" + std::to_string(n_points) + "_k" + std::to_string(k_clusters);
}

std::vector<std::string> CheckScenario(const KMeansScenario &s) {
  std::vector<std::string> v;
  if (s.k_clusters < 1) v.push_back("k_clusters must be at least 1");
  if (s.n_points < 1) v.push_back("n_points must be at least 1");
  if (s.dim != kDim) v.push_back("dim must be 3");
  if (s.iterations < 1) v.push_back("iterations must be at least 1");
  if (s.n_tasks < 1) v.push_back("n_tasks must be at least 1");
  return v;
}

void ValidateScenario(const KMeansScenario &s) {
  auto v = CheckScenario(s);
  if (!v.empty()) throw Error(ErrorCode::kValidation, "invalid k-means scenario", v);
}

double UniformAt(uint64_t seed, uint64_t counter) {
  uint64_t z = Mix(seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL) +
               (counter + 1) * 0x9e3779b97f4a7c15ULL;
  return static_cast<double>(Mix(z) >> 40) * 0x1p-24;
}

PointSet GenerateDataset(const KMeansScenario &s) {
  ValidateScenario(s);
  PointSet p;
  p.n = s.n_points;
  p.k = s.k_clusters;
  p.seed = s.seed;
  p.points.resize(static_cast<size_t>(s.n_points));
  for (int64_t i = 0; i < s.n_points; ++i) {
    for (int d = 0; d < kDim; ++d) {
      p.points[i][d] = UniformAt(s.seed, static_cast<uint64_t>(i) * kDim + d);
    }
  }
  return p;
}

PointSet InitialCentroids(const PointSet &data) {
  if (data.k < 1) throw Error(ErrorCode::kValidation, "k must be at least 1");
  PointSet p;
  p.n = data.k;
  p.k = data.k;
  p.seed = data.seed;
  p.points.resize(static_cast<size_t>(data.k));
  for (int64_t i = 0; i < data.k; ++i) {
    for (int d = 0; d < kDim; ++d) {
      p.points[i][d] = UniformAt(data.seed, static_cast<uint64_t>(i) * kDim + d);
    }
  }
  return p;
}

PointSet Slice(const PointSet &data, int64_t begin, int64_t end) {
  PointSet p;
  p.k = data.k;
  p.seed = data.seed;
  p.points.assign(data.points.begin() + begin, data.points.begin() + end);
  p.n = static_cast<int64_t>(p.points.size());
  return p;
}

std::vector<std::pair<int64_t, int64_t>> PartitionBounds(int64_t n, int64_t n_tasks) {
  if (n_tasks < 1) throw Error(ErrorCode::kValidation, "n_tasks must be at least 1");
  std::vector<std::pair<int64_t, int64_t>> out;
  int64_t size = n / n_tasks;
  for (int64_t t = 0; t < n_tasks; ++t) {
    out.emplace_back(t * size, t + 1 == n_tasks ? n : (t + 1) * size);
  }
  return out;
}

std::string FormatPointSet(const PointSet &p) {
  std::string out = std::to_string(p.n) + " " + std::to_string(p.k) + " " +
                    std::to_string(p.dim) + " " + std::to_string(p.seed) + "\n";
  for (const auto &pt : p.points) {
    out += Real(pt[0]) + " " + Real(pt[1]) + " " + Real(pt[2]) + "\n";
  }
  return out;
}

PointSet ParsePointSet(const std::string &text) {
  auto lines = ContentLines(text);
  if (lines.empty()) throw Error(ErrorCode::kMalformedInput, "empty point file");
  auto header = Fields(lines[0]);
  if (header.size() != 4) {
    throw Error(ErrorCode::kMalformedInput, "header must be 'n k dim seed'");
  }
  PointSet p;
  p.n = Num<int64_t>(header[0], "header");
  p.k = Num<int64_t>(header[1], "header");
  p.dim = Num<int>(header[2], "header");
  p.seed = Num<uint64_t>(header[3], "header");
  if (p.dim != kDim) throw Error(ErrorCode::kMalformedInput, "dim must be 3");
  if (p.n < 0 || static_cast<size_t>(p.n) != lines.size() - 1) {
    throw Error(ErrorCode::kMalformedInput, "header says " + std::to_string(p.n) +
                                                " points, file has " +
                                                std::to_string(lines.size() - 1));
  }
  p.points.resize(static_cast<size_t>(p.n));
  for (size_t i = 1; i < lines.size(); ++i) {
    auto f = Fields(lines[i]);
    std::string where = "line " + std::to_string(i + 1);
    if (f.size() != kDim) throw Error(ErrorCode::kMalformedInput, where + ": expected 3 values");
    for (int d = 0; d < kDim; ++d) p.points[i - 1][d] = Num<double>(f[d], where);
  }
  return p;
}

void WritePointSet(const std::filesystem::path &path, const PointSet &p) {
  WriteFile(path, FormatPointSet(p));
}

PointSet ReadPointSet(const std::filesystem::path &path) {
  std::string text = ReadFile(path);
  try {
    return ParsePointSet(text);
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.what(), e.details());
  }
}

int64_t Nearest(const Point &p, const std::vector<Point> &centroids) {
  int64_t best = 0;
  double best_d = 0;
  for (size_t j = 0; j < centroids.size(); ++j) {
    double d = 0;
    for (int c = 0; c < kDim; ++c) {
      double diff = p[c] - centroids[j][c];
      d += diff * diff;
    }
    if (j == 0 || d < best_d) {
      best = static_cast<int64_t>(j);
      best_d = d;
    }
  }
  return best;
}

MapResult KMeansMap(const std::vector<Point> &points, const std::vector<Point> &centroids) {
  if (centroids.empty()) throw Error(ErrorCode::kValidation, "no centroids");
  MapResult r;
  r.partial.resize(centroids.size());
  r.assignments.reserve(points.size());
  for (const auto &p : points) {
    int64_t j = Nearest(p, centroids);
    r.assignments.push_back(j);
    for (int c = 0; c < kDim; ++c) r.partial[j].sum[c] += p[c];
    ++r.partial[j].count;
  }
  r.distance_computations = static_cast<int64_t>(points.size() * centroids.size());
  return r;
}

std::string FormatPartial(const std::vector<CentroidSum> &partial) {
  std::string out;
  for (size_t j = 0; j < partial.size(); ++j) {
    const auto &s = partial[j];
    out += std::to_string(j) + " " + Real(s.sum[0]) + " " + Real(s.sum[1]) + " " +
           Real(s.sum[2]) + " " + std::to_string(s.count) + "\n";
  }
  return out;
}

std::vector<CentroidSum> ParsePartial(const std::string &text) {
  std::vector<CentroidSum> out;
  auto lines = ContentLines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    auto f = Fields(lines[i]);
    std::string where = "line " + std::to_string(i + 1);
    if (f.size() != 5) {
      throw Error(ErrorCode::kMalformedInput, where + ": expected 'index sx sy sz count'");
    }
    if (Num<int64_t>(f[0], where) != static_cast<int64_t>(i)) {
      throw Error(ErrorCode::kMalformedInput, where + ": index out of order");
    }
    CentroidSum s;
    for (int c = 0; c < kDim; ++c) s.sum[c] = Num<double>(f[1 + c], where);
    s.count = Num<int64_t>(f[4], where);
    if (s.count < 0) throw Error(ErrorCode::kMalformedInput, where + ": negative count");
    out.push_back(s);
  }
  return out;
}

std::vector<Point> KMeansReduce(std::vector<IndexedPartial> partials,
                                const std::vector<Point> &previous) {
  std::stable_sort(partials.begin(), partials.end(),
                   [](const IndexedPartial &a, const IndexedPartial &b) {
                     return a.partition < b.partition;
                   });
  std::vector<CentroidSum> total(previous.size());
  for (const auto &p : partials) {
    if (p.sums.size() != previous.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "partial " + std::to_string(p.partition) + " has " +
                      std::to_string(p.sums.size()) + " centroids, expected " +
                      std::to_string(previous.size()));
    }
    for (size_t j = 0; j < total.size(); ++j) {
      for (int c = 0; c < kDim; ++c) total[j].sum[c] += p.sums[j].sum[c];
      total[j].count += p.sums[j].count;
    }
  }
  std::vector<Point> next = previous;
  for (size_t j = 0; j < total.size(); ++j) {
    if (total[j].count == 0) continue;
    for (int c = 0; c < kDim; ++c) {
      next[j][c] = total[j].sum[c] / static_cast<double>(total[j].count);
    }
  }
  return next;
}

KMeansResult KMeansOracle(const std::vector<Point> &points, std::vector<Point> centroids,
                          int iterations) {
  KMeansResult r;
  for (int it = 0; it < iterations; ++it) {
    MapResult m = KMeansMap(points, centroids);
    r.distance_computations += m.distance_computations;
    r.assignments = std::move(m.assignments);
    centroids = KMeansReduce({{0, std::move(m.partial)}}, centroids);
  }
  r.centroids = std::move(centroids);
  return r;
}

std::string FormatAssignments(const std::vector<int64_t> &a) {
  std::string out;
  for (int64_t v : a) out += std::to_string(v) + "\n";
  return out;
}

std::vector<int64_t> ParseAssignments(const std::string &text) {
  std::vector<int64_t> out;
  auto lines = ContentLines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    out.push_back(Num<int64_t>(Trim(lines[i]), "line " + std::to_string(i + 1)));
  }
  return out;
}

}  // namespace pilotlet::bench
