#include "ndvad/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "ndvad/autodiff.hpp"
#include "ndvad/ops.hpp"

namespace ndvad::scoring {

ScoreSeries score_frames(const model::ModelConfig& cfg, const ParamSet& params, bool with_dpu,
                         const scenesynth::VideoClip& clip, double lambda_s,
                         int first_scored_frame) {
  int t_in = cfg.ae.t_in;
  if (clip.frame_count() <= t_in) {
    throw DataError("score_frames: clip of " + std::to_string(clip.frame_count()) +
                    " frames is too short for t_in = " + std::to_string(t_in));
  }
  int first = std::max(t_in, first_scored_frame);
  NoGradGuard no_grad;
  ScoreSeries out;
  for (int t = first; t < clip.frame_count(); ++t) {
    scenesynth::PairIndex pi{t - t_in, t};
    Tensor x = scenesynth::pair_input(clip, pi, t_in, cfg.ae.dtype);
    Tensor y = scenesynth::pair_target(clip, pi, cfg.ae.dtype);
    model::SampleForward f = model::forward_sample(cfg, params, x, with_dpu);
    double s_fra = mean(square(sub(f.y_hat, y))).item();
    double s_fea = 0.0;
    if (with_dpu) {
      s_fea = dpu::loss_compact(f.dpu_out.x_rows, f.dpu_out.prototypes, f.dpu_out.beta).item();
    }
    if (!std::isfinite(s_fra) || !std::isfinite(s_fea)) {
      throw NumericError("score_frames: non-finite score at frame " + std::to_string(t));
    }
    out.frame_index.push_back(t);
    out.s_fra.push_back(s_fra);
    out.s_fea.push_back(s_fea);
    out.s.push_back(s_fra + lambda_s * s_fea);
    out.labels.push_back(clip.labels[t]);
  }
  return out;
}

namespace {
std::vector<double> minmax_scale(const std::vector<double>& v) {
  auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(v.size(), 0.0);
  if (hi > lo) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) / (hi - lo);
  }
  return out;
}
}  // namespace

ScoreSeries normalize_per_video(const ScoreSeries& in, double lambda_s) {
  if (in.size() < 2) throw DataError("normalize_per_video: need at least 2 scored frames");
  ScoreSeries out = in;
  out.s_fra = minmax_scale(in.s_fra);
  out.s_fea = minmax_scale(in.s_fea);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.s[i] = out.s_fra[i] + lambda_s * out.s_fea[i];
  }
  return out;
}

RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw ContractError("roc_curve: scores and labels must be equal-length and non-empty");
  }
  std::int64_t pos = 0, neg = 0;
  for (int l : labels) (l ? pos : neg)++;
  if (pos == 0 || neg == 0) {
    throw DataError("roc_curve: labels must contain at least one 0 and one 1");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    double v = scores[order[i]];
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == v) {
      (labels[order[j]] ? tp : fp)++;
      ++j;
    }
    curve.thresholds.push_back(v);
    curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(neg));
    curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(pos));
    i = j;
  }
  double area = 0.0;
  for (std::size_t k = 1; k < curve.fpr.size(); ++k) {
    area += (curve.fpr[k] - curve.fpr[k - 1]) * (curve.tpr[k] + curve.tpr[k - 1]) * 0.5;
  }
  curve.auc = area;
  return curve;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  return roc_curve(scores, labels).auc;
}

namespace {
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void write_score_csv(const std::string& path, const ScoreSeries& series) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  os << "frame_index,s_fra,s_fea,s,label\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    os << series.frame_index[i] << "," << fmt(series.s_fra[i]) << "," << fmt(series.s_fea[i])
       << "," << fmt(series.s[i]) << "," << series.labels[i] << "\n";
  }
}

void write_roc_csv(const std::string& path, const RocCurve& curve) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  os << "threshold,fpr,tpr\n";
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    os << fmt(curve.thresholds[i]) << "," << fmt(curve.fpr[i]) << "," << fmt(curve.tpr[i])
       << "\n";
  }
}

ScoreSeries read_score_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(is, line) || line != "frame_index,s_fra,s_fea,s,label") {
    throw DataError("score csv '" + path + "' has an unexpected header");
  }
  ScoreSeries out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t pos = 0; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
      cells.push_back(line.substr(start, pos - start));
    cells.push_back(line.substr(start));
    if (cells.size() != 5) throw DataError("score csv '" + path + "': malformed row");
    out.frame_index.push_back(std::stoi(cells[0]));
    out.s_fra.push_back(std::stod(cells[1]));
    out.s_fea.push_back(std::stod(cells[2]));
    out.s.push_back(std::stod(cells[3]));
    out.labels.push_back(std::stoi(cells[4]));
  }
  return out;
}

}  // namespace ndvad::scoring
