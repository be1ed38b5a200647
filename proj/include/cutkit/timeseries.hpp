#pragma once

#include "cutkit/common.hpp"

#include <json.hpp>

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace cutkit::ts {

// Raw timestamped 3-axis force recording (base frame W, newtons).
struct ForceSeries {
  std::vector<double> time;  // seconds, strictly increasing
  std::vector<Vec3> force;   // newtons
  std::string source;        // originating file, empty for synthetic data

  std::size_t size() const { return force.size(); }
  void validate() const;  // throws std::invalid_argument on bad data
};

// Per-axis whitened series. The population convention (divide by N) is used
// for the standard deviation; axes with zero spread pass through
// mean-subtracted only and are flagged.
struct NormalizedSeries {
  std::vector<double> time;
  std::vector<Vec3> values;  // dimensionless
  Vec3 mean = Vec3::Zero();
  Vec3 stddev = Vec3::Ones();
  std::array<bool, 3> zero_stddev{false, false, false};
  std::string source;

  std::size_t size() const { return values.size(); }
};

// Monotone index mapping between a reference and a query sequence.
struct WarpPath {
  std::vector<std::pair<int, int>> pairs;  // (reference index, query index)
  double cost = 0.0;                       // cumulative distance / total step weight
};

struct SeriesProvenance {
  std::string file;
  int lag = 0;
  double dtw_cost = 0.0;
};

struct AlignedDataset {
  std::vector<double> time_grid;
  std::vector<NormalizedSeries> series;  // all indexed on time_grid
  std::vector<SeriesProvenance> provenance;
  int reference_index = 0;
};

struct AlignConfig {
  int reference = -1;              // -1: longest series
  bool open_ended = true;
  int dtw_window = -1;             // Sakoe-Chiba half-width in samples, -1: unbounded
  double nominal_rate_hz = 500.0;
  double jitter_tolerance = 0.01;  // fraction of the sample period
};

NormalizedSeries normalize(const ForceSeries& series);

// Inverse of normalize() using the stored moments.
ForceSeries denormalize(const NormalizedSeries& series);

// Lag (in samples) by which b trails a, found by maximising the summed
// per-axis cross-correlation over all integer lags. Ties resolve to the
// smallest |lag|, negative before positive.
int coarse_align(const NormalizedSeries& a, const NormalizedSeries& b);

// Symmetric2 dynamic time warping (diagonal weight 2, straight weight 1,
// cost normalized by the total step weight). Open-ended mode consumes the
// reference fully and minimises additionally over query truncation points.
WarpPath dtw_align(const NormalizedSeries& reference, const NormalizedSeries& query,
                   bool open_ended, int window = -1);

// Map query samples onto the reference grid along the warp path. Multiple
// query samples landing on one grid point are averaged; uncovered points are
// linearly interpolated from mapped neighbours.
NormalizedSeries reindex(const NormalizedSeries& query, const WarpPath& path,
                         const std::vector<double>& reference_time);

AlignedDataset build_dataset(const std::vector<ForceSeries>& raw, const AlignConfig& config);

// CSV with header "t,fx,fy,fz", SI units.
ForceSeries read_csv(const std::string& path);
void write_csv(const ForceSeries& series, const std::string& path);

nlohmann::json to_json(const AlignedDataset& dataset);
AlignedDataset dataset_from_json(const nlohmann::json& j);
void save_dataset(const AlignedDataset& dataset, const std::string& path);
AlignedDataset load_dataset(const std::string& path);

}  // namespace cutkit::ts
