#pragma once

#include <string>
#include <vector>

#include "ndvad/model.hpp"
#include "ndvad/scenesynth.hpp"

namespace ndvad::scoring {

// Per-frame anomaly scores aligned with ground-truth labels. Frames before
// t_in (or before first_scored_frame) carry no entry.
struct ScoreSeries {
  std::vector<int> frame_index;
  std::vector<double> s_fra, s_fea, s;
  std::vector<int> labels;
  std::size_t size() const { return frame_index.size(); }
};

// Forward-only scoring of one clip. s_fea is the compactness error of the
// frame's own prototype pool; without the DPU it is zero and s == s_fra.
ScoreSeries score_frames(const model::ModelConfig& cfg, const ParamSet& params, bool with_dpu,
                         const scenesynth::VideoClip& clip, double lambda_s,
                         int first_scored_frame = -1);

// Min-max scales s_fra and s_fea to [0,1] within the video (constant series
// map to zeros) and recombines s = s_fra + lambda_s * s_fea.
ScoreSeries normalize_per_video(const ScoreSeries& in, double lambda_s);

struct RocCurve {
  std::vector<double> thresholds;  // first entry +inf at (0,0)
  std::vector<double> fpr, tpr;
  double auc = 0.0;
};

// Threshold-sweep ROC with trapezoidal area; tied scores collapse into one
// sweep point, which reproduces the Mann-Whitney statistic exactly.
RocCurve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

void write_score_csv(const std::string& path, const ScoreSeries& series);
void write_roc_csv(const std::string& path, const RocCurve& curve);
ScoreSeries read_score_csv(const std::string& path);

}  // namespace ndvad::scoring
