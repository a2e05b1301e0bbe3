// Copyright 2026 The FasterNAM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fasternam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <type_traits>

#include "fasternam/error.hpp"

namespace fasternam {

namespace {

constexpr int kRecallLevels = 101;

double ap_at(std::span<const Detection> dets, std::span<const GroundTruth> gts,
             double thresh, std::int64_t* tp_out = nullptr) {
  const MatchResult m = match_detections(dets, gts, thresh);
  if (tp_out != nullptr) *tp_out = m.true_positives;
  const std::vector<PRPoint> curve =
      pr_curve(m.is_tp, static_cast<std::int64_t>(gts.size()));
  return average_precision(curve);
}

template <typename Record>
std::vector<Record> parse_boxes(std::string_view text, bool with_confidence) {
  std::vector<Record> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  const std::size_t expected = with_confidence ? 7 : 6;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos || raw[first] == '#') continue;

    std::istringstream fields(raw);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.size() != expected) {
      throw ParseError(line_no, "expected " + std::to_string(expected) +
                                    " fields, got " + std::to_string(tok.size()));
    }
    auto number = [&](std::size_t i) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok[i].size() || !std::isfinite(v)) {
        throw ParseError(line_no, "field " + std::to_string(i + 1) +
                                      " is not a number: '" + tok[i] + "'");
      }
      return v;
    };
    const double cat = number(1);
    if (cat != std::floor(cat)) {
      throw ParseError(line_no, "category must be an integer, got '" + tok[1] + "'");
    }
    Record r;
    r.image_id = tok[0];
    r.category = static_cast<int>(cat);
    r.box = BBox{number(2), number(3), number(4), number(5)};
    if (!r.box.valid()) {
      throw ParseError(line_no, "box needs x2 > x1 and y2 > y1");
    }
    if constexpr (std::is_same_v<Record, Detection>) {
      r.confidence = number(6);
      if (r.confidence < 0.0 || r.confidence > 1.0) {
        throw ParseError(line_no, "confidence must lie in [0, 1]");
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << file.rdbuf();
  return buf.str();
}

}  // namespace

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

MatchResult match_detections(std::span<const Detection> dets,
                             std::span<const GroundTruth> gts,
                             double iou_thresh) {
  if (!(iou_thresh > 0.0 && iou_thresh <= 1.0)) {
    throw ValidationError("IoU threshold must lie in (0, 1], got " +
                          std::to_string(iou_thresh));
  }
  const int category = !dets.empty() ? dets.front().category
                       : !gts.empty() ? gts.front().category
                                      : 0;
  for (const Detection& d : dets) {
    if (d.category != category) {
      throw ValidationError("match_detections expects a single category");
    }
  }
  for (const GroundTruth& g : gts) {
    if (g.category != category) {
      throw ValidationError("match_detections expects a single category");
    }
  }

  MatchResult r;
  r.order.resize(dets.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].confidence > dets[b].confidence;
                   });

  std::vector<bool> taken(gts.size(), false);
  for (std::size_t d : r.order) {
    std::ptrdiff_t best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].image_id != dets[d].image_id) continue;
      const double v = iou(dets[d].box, gts[g].box);
      if (v >= iou_thresh && v > best_iou) {
        best = static_cast<std::ptrdiff_t>(g);
        best_iou = v;
      }
    }
    if (best >= 0) {
      taken[static_cast<std::size_t>(best)] = true;
      ++r.true_positives;
    }
    r.is_tp.push_back(best >= 0);
  }
  r.false_negatives =
      static_cast<std::int64_t>(gts.size()) - r.true_positives;
  return r;
}

std::vector<PRPoint> pr_curve(const std::vector<bool>& is_tp,
                              std::int64_t total_gt) {
  if (total_gt < 0) throw ValidationError("total_gt must be non-negative");
  std::vector<PRPoint> curve;
  curve.reserve(is_tp.size());
  std::int64_t tp = 0;
  for (std::size_t k = 0; k < is_tp.size(); ++k) {
    if (is_tp[k]) ++tp;
    const double precision =
        static_cast<double>(tp) / static_cast<double>(k + 1);
    const double recall =
        total_gt > 0 ? static_cast<double>(tp) / static_cast<double>(total_gt)
                     : 0.0;
    curve.push_back({precision, recall});
  }
  return curve;
}

double average_precision(std::span<const PRPoint> curve) {
  if (curve.empty()) return 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].recall < curve[i - 1].recall) {
      throw ValidationError("PR curve recalls must be nondecreasing");
    }
  }
  std::vector<double> envelope(curve.size());
  double running = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    envelope[i] = running;
  }
  double sum = 0.0;
  for (int t = 0; t < kRecallLevels; ++t) {
    const double level = t / 100.0;
    const auto it = std::lower_bound(
        curve.begin(), curve.end(), level,
        [](const PRPoint& p, double r) { return p.recall < r; });
    if (it != curve.end()) sum += envelope[static_cast<std::size_t>(it - curve.begin())];
  }
  return sum / kRecallLevels;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

EvalResult evaluate(std::span<const Detection> dets,
                    std::span<const GroundTruth> gts,
                    const std::vector<double>& iou_thresholds) {
  if (iou_thresholds.empty()) {
    throw ValidationError("evaluate needs at least one IoU threshold");
  }
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw ValidationError("IoU threshold must lie in (0, 1], got " +
                            std::to_string(t));
    }
  }
  if (gts.empty()) {
    throw DegenerateInputError("evaluate: no category has ground truth");
  }

  std::map<int, std::pair<std::vector<Detection>, std::vector<GroundTruth>>> by_cat;
  for (const Detection& d : dets) by_cat[d.category].first.push_back(d);
  for (const GroundTruth& g : gts) by_cat[g.category].second.push_back(g);

  EvalResult r;
  r.thresholds = iou_thresholds;
  double sum50 = 0.0;
  double sum_range = 0.0;
  for (const auto& [cat, pair] : by_cat) {
    const auto& [cdets, cgts] = pair;
    std::vector<double> aps;
    for (double t : iou_thresholds) aps.push_back(ap_at(cdets, cgts, t));
    std::int64_t tp50 = 0;
    sum50 += ap_at(cdets, cgts, 0.5, &tp50);
    sum_range += std::accumulate(aps.begin(), aps.end(), 0.0) /
                 static_cast<double>(aps.size());
    r.per_category_ap.emplace(cat, std::move(aps));
    r.true_positives += tp50;
    r.false_positives += static_cast<std::int64_t>(cdets.size()) - tp50;
    r.false_negatives += static_cast<std::int64_t>(cgts.size()) - tp50;
  }
  const double n_cats = static_cast<double>(by_cat.size());
  r.map50 = sum50 / n_cats;
  r.map5095 = sum_range / n_cats;
  r.precision_defined = !dets.empty();
  r.precision = r.precision_defined ? static_cast<double>(r.true_positives) /
                                          static_cast<double>(dets.size())
                                    : 0.0;
  r.recall = static_cast<double>(r.true_positives) /
             static_cast<double>(gts.size());
  return r;
}

std::vector<GroundTruth> parse_ground_truth(std::string_view text) {
  return parse_boxes<GroundTruth>(text, false);
}

std::vector<Detection> parse_detections(std::string_view text) {
  return parse_boxes<Detection>(text, true);
}

std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path) {
  return parse_ground_truth(read_file(path));
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  return parse_detections(read_file(path));
}

}  // namespace fasternam
