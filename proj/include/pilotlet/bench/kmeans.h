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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pilotlet::bench {

constexpr int kDim = 3;
using Point = std::array<double, kDim>;

struct KMeansScenario {
  int64_t n_points = 0;
  int64_t k_clusters = 0;
  int dim = kDim;
  int iterations = 2;
  int64_t n_tasks = 1;
  uint64_t seed = 42;

  /// "n<points>_k<clusters>".
  std::string Label() const;
};

std::vector<std::string> CheckScenario(const KMeansScenario &s);
/// Throws kValidation listing every violation.
void ValidateScenario(const KMeansScenario &s);

/// A dataset, partition or centroid file. For centroid files `n` == `k`.
struct PointSet {
  int64_t n = 0;
  int64_t k = 0;
  int dim = kDim;
  uint64_t seed = 0;
  std::vector<Point> points;

  bool operator==(const PointSet &) const = default;
};

/// Uniform value in [0, 1) for (`seed`, `counter`) from a SplitMix64-style
/// counter-based generator. Values lie on a 2^-24 grid, so sums of up to
/// 2^29 of them are exact in double precision whatever the order.
double UniformAt(uint64_t seed, uint64_t counter);

PointSet GenerateDataset(const KMeansScenario &s);
/// The first k draws of the generator behind `data`: its first k points when
/// n >= k, continuing the same stream otherwise.
PointSet InitialCentroids(const PointSet &data);
/// Points [begin, end) of `data`, keeping its k and seed.
PointSet Slice(const PointSet &data, int64_t begin, int64_t end);

/// [begin, end) of each of `n_tasks` partitions: equal sizes n / n_tasks,
/// the last one taking the remainder.
std::vector<std::pair<int64_t, int64_t>> PartitionBounds(int64_t n, int64_t n_tasks);

/// Header `n k dim seed`, then one point per line with 17 significant digits.
std::string FormatPointSet(const PointSet &p);
/// Throws kMalformedInput.
PointSet ParsePointSet(const std::string &text);
/// Throws kIoFailed.
void WritePointSet(const std::filesystem::path &path, const PointSet &p);
/// Throws kIoFailed or kMalformedInput.
PointSet ReadPointSet(const std::filesystem::path &path);

struct CentroidSum {
  Point sum{};
  int64_t count = 0;

  bool operator==(const CentroidSum &) const = default;
};

/// Squared Euclidean distance; ties go to the lowest index.
int64_t Nearest(const Point &p, const std::vector<Point> &centroids);

struct MapResult {
  std::vector<CentroidSum> partial;
  std::vector<int64_t> assignments;
  int64_t distance_computations = 0;
};

MapResult KMeansMap(const std::vector<Point> &points, const std::vector<Point> &centroids);

/// `k` lines of `index sx sy sz count`.
std::string FormatPartial(const std::vector<CentroidSum> &partial);
/// Throws kMalformedInput unless the lines are indices 0..k-1 in order.
std::vector<CentroidSum> ParsePartial(const std::string &text);

struct IndexedPartial {
  int64_t partition = 0;
  std::vector<CentroidSum> sums;
};

/// Merges partials in ascending partition order. Centroids without points
/// keep their previous position. Throws kShapeMismatch when a partial's k
/// differs from `previous`.
std::vector<Point> KMeansReduce(std::vector<IndexedPartial> partials,
                                const std::vector<Point> &previous);

struct KMeansResult {
  std::vector<Point> centroids;
  /// Nearest centroid of each point in the last iteration.
  std::vector<int64_t> assignments;
  int64_t distance_computations = 0;
};

/// Single-process Lloyd iterations.
KMeansResult KMeansOracle(const std::vector<Point> &points, std::vector<Point> centroids,
                          int iterations);

/// One integer per line.
std::string FormatAssignments(const std::vector<int64_t> &a);
std::vector<int64_t> ParseAssignments(const std::string &text);

}  // namespace pilotlet::bench
