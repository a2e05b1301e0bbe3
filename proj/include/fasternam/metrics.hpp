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

// Detection evaluation: IoU, greedy matching, precision/recall curves,
// 101-point interpolated AP, and mAP over categories and IoU thresholds.

#ifndef FASTERNAM_METRICS_HPP_
#define FASTERNAM_METRICS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fasternam {

// Corner format, absolute coordinates.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double area() const { return (x2 - x1) * (y2 - y1); }
  bool valid() const { return x2 > x1 && y2 > y1; }
};

struct Detection {
  std::string image_id;
  int category = 0;
  BBox box;
  double confidence = 0.0;
};

struct GroundTruth {
  std::string image_id;
  int category = 0;
  BBox box;
};

double iou(const BBox& a, const BBox& b);

struct MatchResult {
  // Detection indices by descending confidence (stable), and whether each
  // of them was a true positive.
  std::vector<std::size_t> order;
  std::vector<bool> is_tp;
  std::int64_t true_positives = 0;
  std::int64_t false_negatives = 0;  // unmatched ground truth
};

// Greedy: highest confidence first, each detection takes the unmatched
// same-image ground truth with the highest IoU >= iou_thresh (lowest index
// on ties). All inputs must share one category.
MatchResult match_detections(std::span<const Detection> dets,
                             std::span<const GroundTruth> gts,
                             double iou_thresh);

struct PRPoint {
  double precision = 0.0;
  double recall = 0.0;
};

// Cumulative precision/recall after each ranked detection.
std::vector<PRPoint> pr_curve(const std::vector<bool>& is_tp,
                              std::int64_t total_gt);

// 101-point interpolated AP over recall levels 0, 0.01, ..., 1 using the
// monotone (right-to-left maximum) precision envelope. Empty curve -> 0.
double average_precision(std::span<const PRPoint> curve);

// 0.50, 0.55, ..., 0.95.
std::vector<double> coco_iou_thresholds();

struct EvalResult {
  std::vector<double> thresholds;
  // category -> AP at each entry of `thresholds`
  std::map<int, std::vector<double>> per_category_ap;
  double map50 = 0.0;
  // Mean over categories of the per-category mean AP across `thresholds`;
  // mAP@.5:.95 for the default grid.
  double map5095 = 0.0;
  // Aggregate at IoU 0.5 over every detection.
  double precision = 0.0;
  double recall = 0.0;
  bool precision_defined = false;  // false when there are no detections
  std::int64_t true_positives = 0;
  std::int64_t false_positives = 0;
  std::int64_t false_negatives = 0;
};

EvalResult evaluate(std::span<const Detection> dets,
                    std::span<const GroundTruth> gts,
                    const std::vector<double>& iou_thresholds =
                        coco_iou_thresholds());

// Whitespace-delimited `image_id category x1 y1 x2 y2` (ground truth) or the
// same plus trailing `confidence` (detections). Lines starting with '#' and
// blank lines are skipped; anything else malformed raises ParseError.
std::vector<GroundTruth> parse_ground_truth(std::string_view text);
std::vector<Detection> parse_detections(std::string_view text);
std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path);
std::vector<Detection> load_detections(const std::filesystem::path& path);

}  // namespace fasternam

#endif  // FASTERNAM_METRICS_HPP_
