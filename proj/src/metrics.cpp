#include "cooptrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cooptrack/error.hpp"

namespace cooptrack::metrics {

void MetricConfig::validate() const {
  if (!(tau > 0.0) || !(alpha > 0.0) || !(beta > 0.0)) {
    throw InvalidArgument("metric config needs tau, alpha and beta > 0");
  }
}

FrameRecord make_record(double t, bool g, std::optional<double> delta, const MetricConfig& cfg) {
  FrameRecord r;
  r.t = t;
  r.g = g;
  r.delta = delta;
  if (!g) return r;
  if (!delta) {
    r.dm = true;
  } else if (*delta <= cfg.tau) {
    r.c = true;
    r.d = *delta;
  } else {
    r.lm = true;
  }
  return r;
}

std::vector<FrameRecord> build_records(std::span<const TruthPoint> truth,
                                       std::span<const TrackPoint> tracks,
                                       const MetricConfig& cfg, double time_tolerance) {
  cfg.validate();
  std::vector<TrackPoint> sorted(tracks.begin(), tracks.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TrackPoint& a, const TrackPoint& b) { return a.t < b.t; });

  std::vector<FrameRecord> out;
  out.reserve(truth.size());
  auto it = sorted.begin();
  for (const auto& g : truth) {
    while (it != sorted.end() && it->t < g.t - time_tolerance) ++it;
    std::optional<double> best;
    for (auto k = it; k != sorted.end() && k->t <= g.t + time_tolerance; ++k) {
      if (!k->valid) continue;
      const double dist = std::hypot(k->x - g.x, k->y - g.y);
      if (!best || dist < *best) best = dist;
    }
    out.push_back(make_record(g.t, true, best, cfg));
  }
  return out;
}

double motp(std::span<const FrameRecord> frames, const MetricConfig& cfg) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& f : frames) {
    if (!f.g) continue;
    if (f.c) {
      num += f.d;
      den += 1.0;
    } else if (f.lm) {
      num += cfg.tau;
      den += 1.0;
    }
  }
  if (den == 0.0) throw UndefinedMetric("MOTP undefined: no matched or localization-miss frames");
  return num / den;
}

double mota(std::span<const FrameRecord> frames) {
  double misses = 0.0;
  double g = 0.0;
  for (const auto& f : frames) {
    if (!f.g) continue;
    g += 1.0;
    misses += (f.dm ? 1.0 : 0.0) + (f.lm ? 2.0 : 0.0);
  }
  if (g == 0.0) throw UndefinedMetric("MOTA undefined: no ground-truth frames");
  return 1.0 - misses / g;
}

int motap(const MetricPair& a, const MetricPair& b, const MetricConfig& cfg) {
  const bool better_accuracy = a.mota > b.mota + cfg.alpha && a.motp < b.motp + cfg.beta;
  const bool better_precision = a.mota > b.mota - cfg.alpha && a.motp < b.motp - cfg.beta;
  return better_accuracy || better_precision ? 1 : 0;
}

MetricPair MetricReport::pair() const { return {mota, motp.value_or(std::numeric_limits<double>::quiet_NaN())}; }

Json MetricReport::to_json() const {
  return {{"scene_id", scene_id},
          {"model_id", model_id},
          {"motp", motp ? Json(*motp) : Json(nullptr)},
          {"mota", mota},
          {"frame_counts",
           {{"frames", counts.frames}, {"matches", counts.matches}, {"dm", counts.dm}, {"lm", counts.lm}}}};
}

MetricReport make_report(std::string scene_id, std::string model_id,
                         std::span<const FrameRecord> frames, const MetricConfig& cfg) {
  MetricReport r;
  r.scene_id = std::move(scene_id);
  r.model_id = std::move(model_id);
  for (const auto& f : frames) {
    if (!f.g) continue;
    ++r.counts.frames;
    r.counts.matches += f.c ? 1 : 0;
    r.counts.dm += f.dm ? 1 : 0;
    r.counts.lm += f.lm ? 1 : 0;
  }
  r.mota = mota(frames);
  try {
    r.motp = motp(frames, cfg);
  } catch (const UndefinedMetric&) {
    r.motp.reset();
  }
  return r;
}

Json PairwiseReport::to_json() const {
  return {{"a", a.to_json()}, {"b", b.to_json()}, {"motap_ab", motap_ab}, {"motap_ba", motap_ba}};
}

PairwiseReport compare_reports(MetricReport a, MetricReport b, const MetricConfig& cfg) {
  const MetricPair pa{a.mota, a.motp.value_or(cfg.tau)};
  const MetricPair pb{b.mota, b.motp.value_or(cfg.tau)};
  PairwiseReport r{std::move(a), std::move(b), 0, 0};
  r.motap_ab = motap(pa, pb, cfg);
  r.motap_ba = motap(pb, pa, cfg);
  return r;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    if (s.n == 0) {
      s.min = s.max = v;
    } else {
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
    sum += v;
    ++s.n;
  }
  if (s.n > 0) s.mean = sum / s.n;
  return s;
}

}  // namespace cooptrack::metrics
