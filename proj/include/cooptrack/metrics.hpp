#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cooptrack/json.hpp"

namespace cooptrack::metrics {

struct MetricConfig {
  double tau = 1.0;     // miss threshold [m]
  double alpha = 0.025; // MOTA significance
  double beta = 0.01;   // MOTP significance [m]

  void validate() const;
};

// One evaluated frame. `delta` is the x-y distance to the evaluated track and
// is absent when no valid track exists.
struct FrameRecord {
  double t = 0.0;
  bool g = true;
  std::optional<double> delta;
  bool dm = false;
  bool lm = false;
  bool c = false;
  double d = 0.0;
};

FrameRecord make_record(double t, bool g, std::optional<double> delta, const MetricConfig& cfg);

// A tracked position at time t; only valid tracks take part in evaluation.
struct TrackPoint {
  double t = 0.0;
  int track_id = 0;
  double x = 0.0;
  double y = 0.0;
  bool valid = false;
};

struct TruthPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

// Pairs every ground-truth frame with the nearest valid track at the same
// timestamp (within `time_tolerance`).
std::vector<FrameRecord> build_records(std::span<const TruthPoint> truth,
                                       std::span<const TrackPoint> tracks,
                                       const MetricConfig& cfg, double time_tolerance = 1e-6);

// (sum d + sum lm * tau) / (sum c + sum lm); UndefinedMetric when the
// denominator is zero.
double motp(std::span<const FrameRecord> frames, const MetricConfig& cfg);

// 1 - sum(dm + 2 lm) / sum g; UndefinedMetric without ground truth.
double mota(std::span<const FrameRecord> frames);

struct MetricPair {
  double mota = 0.0;
  double motp = 0.0;
};

// 1 when A is significantly better than B.
int motap(const MetricPair& a, const MetricPair& b, const MetricConfig& cfg);

struct FrameCounts {
  int frames = 0;
  int matches = 0;
  int dm = 0;
  int lm = 0;
};

struct MetricReport {
  std::string scene_id;
  std::string model_id;
  std::optional<double> motp;  // absent when undefined
  double mota = 0.0;
  FrameCounts counts;

  MetricPair pair() const;
  Json to_json() const;
};

MetricReport make_report(std::string scene_id, std::string model_id,
                         std::span<const FrameRecord> frames, const MetricConfig& cfg);

struct PairwiseReport {
  MetricReport a;
  MetricReport b;
  int motap_ab = 0;
  int motap_ba = 0;

  Json to_json() const;
};

// Undefined MOTP compares as tau, the worst attainable value.
PairwiseReport compare_reports(MetricReport a, MetricReport b, const MetricConfig& cfg);

struct Summary {
  int n = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

// Over the finite values only; n = 0 when none exist.
Summary summarize(std::span<const double> values);

}  // namespace cooptrack::metrics
