#include "cutkit/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace cutkit::ts {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sample_distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

// Uniform re-sampling by linear interpolation onto the nominal rate grid.
ForceSeries resample_uniform(const ForceSeries& in, double rate_hz) {
  const double period = 1.0 / rate_hz;
  const double t0 = in.time.front();
  const double t_end = in.time.back();
  const auto n = static_cast<std::size_t>(std::floor((t_end - t0) / period + 1e-9)) + 1;

  ForceSeries out;
  out.source = in.source;
  out.time.reserve(n);
  out.force.reserve(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + static_cast<double>(i) * period;
    while (k + 2 < in.time.size() && in.time[k + 1] <= t) ++k;
    const double span = in.time[k + 1] - in.time[k];
    const double w = std::clamp((t - in.time[k]) / span, 0.0, 1.0);
    out.time.push_back(t);
    out.force.push_back((1.0 - w) * in.force[k] + w * in.force[k + 1]);
  }
  return out;
}

double timestamp_jitter(const ForceSeries& s, double rate_hz) {
  const double period = 1.0 / rate_hz;
  double worst = 0.0;
  for (std::size_t i = 1; i < s.time.size(); ++i)
    worst = std::max(worst, std::abs(s.time[i] - s.time[i - 1] - period));
  return worst / period;
}

}  // namespace

void ForceSeries::validate() const {
  if (force.size() < 2) throw std::invalid_argument("force series needs at least 2 samples");
  if (time.size() != force.size())
    throw std::invalid_argument("timestamp/force length mismatch");
  for (std::size_t i = 0; i < force.size(); ++i) {
    if (!force[i].allFinite() || !std::isfinite(time[i]))
      throw std::invalid_argument("non-finite sample at index " + std::to_string(i));
    if (i > 0 && time[i] <= time[i - 1])
      throw std::invalid_argument("timestamps not strictly increasing at index " +
                                  std::to_string(i));
  }
}

NormalizedSeries normalize(const ForceSeries& series) {
  series.validate();
  const auto n = static_cast<double>(series.size());

  Vec3 mean = Vec3::Zero();
  for (const auto& f : series.force) mean += f;
  mean /= n;

  Vec3 var = Vec3::Zero();
  for (const auto& f : series.force) var += (f - mean).cwiseProduct(f - mean);
  var /= n;  // population convention

  NormalizedSeries out;
  out.time = series.time;
  out.source = series.source;
  out.mean = mean;
  for (int a = 0; a < 3; ++a) {
    const double sd = std::sqrt(var[a]);
    if (sd > 0.0) {
      out.stddev[a] = sd;
    } else {
      out.stddev[a] = 1.0;
      out.zero_stddev[a] = true;
    }
  }
  out.values.reserve(series.size());
  for (const auto& f : series.force)
    out.values.push_back((f - mean).cwiseQuotient(out.stddev));
  return out;
}

ForceSeries denormalize(const NormalizedSeries& series) {
  ForceSeries out;
  out.time = series.time;
  out.source = series.source;
  out.force.reserve(series.size());
  for (const auto& v : series.values)
    out.force.push_back(v.cwiseProduct(series.stddev) + series.mean);
  return out;
}

int coarse_align(const NormalizedSeries& a, const NormalizedSeries& b) {
  if (a.values.empty() || b.values.empty())
    throw std::invalid_argument("coarse_align: empty series");
  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());

  int best_lag = 0;
  double best_corr = -kInf;
  for (int lag = -(nb - 1); lag <= na - 1; ++lag) {
    double corr = 0.0;
    const int n0 = std::max(0, -lag);
    const int n1 = std::min(na, nb - lag);
    for (int n = n0; n < n1; ++n) corr += a.values[n].dot(b.values[n + lag]);
    const bool better =
        corr > best_corr ||
        (corr == best_corr && (std::abs(lag) < std::abs(best_lag) ||
                               (std::abs(lag) == std::abs(best_lag) && lag < best_lag)));
    if (better) {
      best_corr = corr;
      best_lag = lag;
    }
  }
  return best_lag;
}

WarpPath dtw_align(const NormalizedSeries& reference, const NormalizedSeries& query,
                   bool open_ended, int window) {
  if (reference.values.empty() || query.values.empty())
    throw std::invalid_argument("dtw_align: empty series");
  const int L = static_cast<int>(reference.size());
  const int M = static_cast<int>(query.size());

  const double slope = L > 1 ? static_cast<double>(M - 1) / static_cast<double>(L - 1) : 0.0;
  auto in_band = [&](int i, int j) {
    if (window < 0) return true;
    return std::abs(j - slope * i) <= static_cast<double>(window);
  };

  Eigen::MatrixXd g(L, M);
  g.setConstant(kInf);
  g(0, 0) = sample_distance(reference.values[0], query.values[0]);
  for (int i = 1; i < L; ++i)
    if (in_band(i, 0))
      g(i, 0) = g(i - 1, 0) + sample_distance(reference.values[i], query.values[0]);
  for (int j = 1; j < M; ++j)
    if (in_band(0, j))
      g(0, j) = g(0, j - 1) + sample_distance(reference.values[0], query.values[j]);
  for (int i = 1; i < L; ++i) {
    for (int j = 1; j < M; ++j) {
      if (!in_band(i, j)) continue;
      const double d = sample_distance(reference.values[i], query.values[j]);
      g(i, j) = std::min({g(i - 1, j - 1) + 2.0 * d, g(i - 1, j) + d, g(i, j - 1) + d});
    }
  }

  // Reference is always consumed fully; open-ended additionally minimises the
  // per-endpoint normalized cost over query truncation points.
  int m_end = M - 1;
  double best = g(L - 1, M - 1) / static_cast<double>(L + M);
  if (open_ended) {
    for (int j = 0; j < M; ++j) {
      const double c = g(L - 1, j) / static_cast<double>(L + j + 1);
      if (c < best) {
        best = c;
        m_end = j;
      }
    }
  }
  if (!std::isfinite(best)) throw std::runtime_error("dtw_align: window admits no path");

  WarpPath path;
  path.cost = best;
  int i = L - 1;
  int j = m_end;
  path.pairs.emplace_back(i, j);
  while (i > 0 || j > 0) {
    const double d = sample_distance(reference.values[i], query.values[j]);
    if (i > 0 && j > 0 && g(i - 1, j - 1) + 2.0 * d == g(i, j)) {
      --i;
      --j;
    } else if (i > 0 && g(i - 1, j) + d == g(i, j)) {
      --i;
    } else if (j > 0 && g(i, j - 1) + d == g(i, j)) {
      --j;
    } else if (i > 0) {  // numeric fallback, pick the cheaper predecessor
      if (j > 0 && g(i, j - 1) < g(i - 1, j))
        --j;
      else
        --i;
    } else {
      --j;
    }
    path.pairs.emplace_back(i, j);
  }
  std::reverse(path.pairs.begin(), path.pairs.end());
  return path;
}

NormalizedSeries reindex(const NormalizedSeries& query, const WarpPath& path,
                         const std::vector<double>& reference_time) {
  const int L = static_cast<int>(reference_time.size());
  const int M = static_cast<int>(query.size());
  std::vector<Vec3> sum(L, Vec3::Zero());
  std::vector<int> count(L, 0);
  for (const auto& [l, m] : path.pairs) {
    if (l < 0 || l >= L || m < 0 || m >= M)
      throw std::out_of_range("reindex: path index out of bounds");
    sum[l] += query.values[m];
    count[l] += 1;
  }

  NormalizedSeries out;
  out.time = reference_time;
  out.mean = query.mean;
  out.stddev = query.stddev;
  out.zero_stddev = query.zero_stddev;
  out.source = query.source;
  out.values.assign(L, Vec3::Zero());
  for (int l = 0; l < L; ++l)
    if (count[l] > 0) out.values[l] = sum[l] / count[l];

  // Grid points no query sample mapped to get linear interpolation between
  // the nearest mapped neighbours (nearest value at the edges).
  int prev = -1;
  for (int l = 0; l < L; ++l) {
    if (count[l] > 0) {
      prev = l;
      continue;
    }
    int next = -1;
    for (int r = l + 1; r < L; ++r)
      if (count[r] > 0) {
        next = r;
        break;
      }
    if (prev < 0 && next < 0) throw std::invalid_argument("reindex: empty path");
    if (prev < 0)
      out.values[l] = out.values[next];
    else if (next < 0)
      out.values[l] = out.values[prev];
    else {
      const double w = static_cast<double>(l - prev) / static_cast<double>(next - prev);
      out.values[l] = (1.0 - w) * out.values[prev] + w * out.values[next];
    }
  }
  return out;
}

AlignedDataset build_dataset(const std::vector<ForceSeries>& raw, const AlignConfig& config) {
  if (raw.empty()) throw std::invalid_argument("build_dataset: no input series");

  std::vector<ForceSeries> prepared;
  prepared.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    try {
      raw[i].validate();
      if (timestamp_jitter(raw[i], config.nominal_rate_hz) > config.jitter_tolerance)
        prepared.push_back(resample_uniform(raw[i], config.nominal_rate_hz));
      else
        prepared.push_back(raw[i]);
    } catch (const std::exception& e) {
      throw std::invalid_argument("series " + std::to_string(i) + ": " + e.what());
    }
  }

  int ref = config.reference;
  if (ref < 0) {
    std::size_t longest = 0;
    for (std::size_t i = 1; i < prepared.size(); ++i)
      if (prepared[i].size() > prepared[longest].size()) longest = i;
    ref = static_cast<int>(longest);
  }
  if (ref >= static_cast<int>(prepared.size()))
    throw std::invalid_argument("build_dataset: reference index out of range");

  NormalizedSeries reference = normalize(prepared[ref]);

  // Coarse lags first; the common grid is then the stretch of the reference
  // covered by every trial, so fine alignment never has to invent data at
  // the edges.
  std::vector<NormalizedSeries> queries(prepared.size());
  std::vector<int> lags(prepared.size(), 0);
  int row_begin = 0;
  int row_end = static_cast<int>(reference.size());
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    if (static_cast<int>(i) == ref) continue;
    try {
      queries[i] = normalize(prepared[i]);
      lags[i] = coarse_align(reference, queries[i]);
      row_begin = std::max(row_begin, -lags[i]);
      row_end = std::min(row_end, static_cast<int>(queries[i].size()) - lags[i]);
    } catch (const std::exception& e) {
      throw std::invalid_argument("series " + std::to_string(i) + ": " + e.what());
    }
  }
  if (row_end - row_begin < 2)
    throw std::invalid_argument("build_dataset: no common time support across series");
  if (row_begin > 0 || row_end < static_cast<int>(reference.size())) {
    reference.time = {reference.time.begin() + row_begin, reference.time.begin() + row_end};
    reference.values = {reference.values.begin() + row_begin,
                        reference.values.begin() + row_end};
  }

  AlignedDataset out;
  out.reference_index = ref;
  out.time_grid = reference.time;
  out.series.resize(prepared.size());
  out.provenance.resize(prepared.size());
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    out.provenance[i].file = prepared[i].source;
    if (static_cast<int>(i) == ref) {
      out.series[i] = reference;
      continue;
    }
    try {
      NormalizedSeries query = std::move(queries[i]);
      out.provenance[i].lag = lags[i];
      const int crop = row_begin + lags[i];  // >= 0 by construction of row_begin
      if (crop > 0) {
        query.values.erase(query.values.begin(), query.values.begin() + crop);
        query.time.erase(query.time.begin(), query.time.begin() + crop);
      }
      const WarpPath path = dtw_align(reference, query, config.open_ended, config.dtw_window);
      out.provenance[i].dtw_cost = path.cost;
      out.series[i] = reindex(query, path, out.time_grid);
    } catch (const std::exception& e) {
      throw std::invalid_argument("series " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

ForceSeries read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
  std::string header = trim(line);
  header.erase(std::remove(header.begin(), header.end(), ' '), header.end());
  if (header != "t,fx,fy,fz")
    throw std::runtime_error(path + ": expected header 't,fx,fy,fz', got '" + line + "'");

  ForceSeries out;
  out.source = path;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    std::istringstream ss(line);
    double v[4];
    char comma;
    if (!(ss >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3]))
      throw std::runtime_error(path + ": malformed row " + std::to_string(row));
    out.time.push_back(v[0]);
    out.force.emplace_back(v[1], v[2], v[3]);
  }
  out.validate();
  return out;
}

void write_csv(const ForceSeries& series, const std::string& path) {
  std::ofstream outfile(path);
  if (!outfile) throw std::runtime_error("cannot write csv: " + path);
  outfile << "t,fx,fy,fz\n";
  char buf[160];
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g\n", series.time[i],
                  series.force[i].x(), series.force[i].y(), series.force[i].z());
    outfile << buf;
  }
}

nlohmann::json to_json(const AlignedDataset& dataset) {
  nlohmann::json j;
  j["time_grid"] = dataset.time_grid;
  j["reference_index"] = dataset.reference_index;
  j["normalization"] = "population";
  auto series = nlohmann::json::array();
  auto provenance = nlohmann::json::array();
  for (std::size_t i = 0; i < dataset.series.size(); ++i) {
    const auto& s = dataset.series[i];
    nlohmann::json values = nlohmann::json::array();
    for (const auto& v : s.values) values.push_back({v.x(), v.y(), v.z()});
    series.push_back({{"values", values},
                      {"mean", {s.mean.x(), s.mean.y(), s.mean.z()}},
                      {"stddev", {s.stddev.x(), s.stddev.y(), s.stddev.z()}},
                      {"zero_stddev", s.zero_stddev}});
    provenance.push_back({{"file", dataset.provenance[i].file},
                          {"lag", dataset.provenance[i].lag},
                          {"dtw_cost", dataset.provenance[i].dtw_cost}});
  }
  j["series"] = series;
  j["provenance"] = provenance;
  return j;
}

AlignedDataset dataset_from_json(const nlohmann::json& j) {
  AlignedDataset out;
  out.time_grid = j.at("time_grid").get<std::vector<double>>();
  out.reference_index = j.at("reference_index").get<int>();
  for (std::size_t i = 0; i < j.at("series").size(); ++i) {
    const auto& js = j.at("series")[i];
    NormalizedSeries s;
    s.time = out.time_grid;
    for (const auto& v : js.at("values"))
      s.values.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    for (int a = 0; a < 3; ++a) {
      s.mean[a] = js.at("mean")[a].get<double>();
      s.stddev[a] = js.at("stddev")[a].get<double>();
      s.zero_stddev[a] = js.at("zero_stddev")[a].get<bool>();
    }
    const auto& jp = j.at("provenance")[i];
    SeriesProvenance p;
    p.file = jp.at("file").get<std::string>();
    p.lag = jp.at("lag").get<int>();
    p.dtw_cost = jp.at("dtw_cost").get<double>();
    s.source = p.file;
    out.series.push_back(std::move(s));
    out.provenance.push_back(std::move(p));
  }
  return out;
}

void save_dataset(const AlignedDataset& dataset, const std::string& path) {
  std::ofstream outfile(path);
  if (!outfile) throw std::runtime_error("cannot write: " + path);
  outfile << to_json(dataset).dump(2) << "\n";
}

AlignedDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  nlohmann::json j;
  in >> j;
  return dataset_from_json(j);
}

}  // namespace cutkit::ts
