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

#include <iostream>

#include "CLI11.hpp"
#include "pilotlet/bench/kmeans.h"
#include "pilotlet/core/error.h"
#include "pilotlet/core/fs_util.h"

namespace {

using namespace pilotlet;
using namespace pilotlet::bench;

pilotlet::bench::IndexedPartial LoadPartial(const std::string &spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kValidation, "--partial expects <index>:<path>, got '" + spec + "'");
  }
  IndexedPartial p;
  p.partition = std::stoll(spec.substr(0, colon));
  p.sums = ParsePartial(ReadFile(spec.substr(colon + 1)));
  return p;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"pilotlet-kmeans: k-means dataset generation, map and reduce steps"};
  app.require_subcommand(1);

  KMeansScenario scenario;
  std::string points_out, centroids_out;
  auto *gen = app.add_subcommand("generate", "Write a dataset and its initial centroids");
  gen->add_option("--n", scenario.n_points, "Number of points")->required();
  gen->add_option("--k", scenario.k_clusters, "Number of clusters")->required();
  gen->add_option("--seed", scenario.seed, "Generator seed");
  gen->add_option("--points", points_out, "Dataset file")->required();
  gen->add_option("--centroids", centroids_out, "Initial centroid file")->required();

  std::string points_in, centroids_in, partial_out, assign_out;
  auto *map = app.add_subcommand("map", "Assign points to centroids and write partial sums");
  map->add_option("--points", points_in, "Partition file")->required();
  map->add_option("--centroids", centroids_in, "Centroid file")->required();
  map->add_option("--out", partial_out, "Partial sum file")->required();
  map->add_option("--assign", assign_out, "Assignment file");

  std::string previous, reduce_out;
  std::vector<std::string> partials;
  auto *reduce = app.add_subcommand("reduce", "Merge partial sums into new centroids");
  reduce->add_option("--centroids", previous, "Previous centroid file")->required();
  reduce->add_option("--out", reduce_out, "New centroid file")->required();
  reduce->add_option("--partial", partials, "<index>:<path> of a partial sum file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e);
  }

  try {
    if (*gen) {
      PointSet data = GenerateDataset(scenario);
      WritePointSet(points_out, data);
      WritePointSet(centroids_out, InitialCentroids(data));
    } else if (*map) {
      PointSet points = ReadPointSet(points_in);
      PointSet centroids = ReadPointSet(centroids_in);
      MapResult r = KMeansMap(points.points, centroids.points);
      WriteFile(partial_out, FormatPartial(r.partial));
      if (!assign_out.empty()) WriteFile(assign_out, FormatAssignments(r.assignments));
      std::cout << "distance_computations " << r.distance_computations << std::endl;
    } else if (*reduce) {
      PointSet centroids = ReadPointSet(previous);
      std::vector<IndexedPartial> loaded;
      for (const auto &p : partials) loaded.push_back(LoadPartial(p));
      centroids.points = KMeansReduce(std::move(loaded), centroids.points);
      WritePointSet(reduce_out, centroids);
    }
  } catch (const std::exception &e) {
    std::cerr << "pilotlet-kmeans: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
