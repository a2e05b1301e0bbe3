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

#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "ap_oracle.hpp"
#include "fasternam/error.hpp"
#include "fasternam/metrics.hpp"
#include "test_util.hpp"

namespace fasternam {
namespace {

using testing::brute_force_ap;
using testing::Rng;
using testing::uniform_int;
using testing::uniform_real;

BBox random_box(Rng& rng) {
  const double x = uniform_real(rng, 0, 20);
  const double y = uniform_real(rng, 0, 20);
  return {x, y, x + uniform_real(rng, 1, 10), y + uniform_real(rng, 1, 10)};
}

GroundTruth gt(const std::string& img, int cat, BBox b) { return {img, cat, b}; }
Detection det(const std::string& img, int cat, BBox b, double conf) {
  return {img, cat, b, conf};
}

// Ground truth on a 4x3 grid of images/boxes plus detections that jitter
// some of them and add spurious boxes.
struct Instance {
  std::vector<GroundTruth> gts;
  std::vector<Detection> dets;
};

Instance random_instance(Rng& rng, int categories = 1) {
  Instance in;
  const int n_gt = static_cast<int>(uniform_int(rng, 1, 5));
  for (int i = 0; i < n_gt; ++i) {
    in.gts.push_back(gt("img" + std::to_string(uniform_int(rng, 0, 1)),
                        static_cast<int>(uniform_int(rng, 0, categories - 1)), random_box(rng)));
  }
  const int n_det = static_cast<int>(uniform_int(rng, 0, 8));
  for (int i = 0; i < n_det; ++i) {
    Detection d;
    if (uniform_int(rng, 0, 2) > 0) {
      const GroundTruth& g = in.gts[uniform_int(rng, 0, n_gt - 1)];
      const double j = uniform_real(rng, -1.5, 1.5);
      d = det(g.image_id, g.category, {g.box.x1 + j, g.box.y1, g.box.x2 + j, g.box.y2}, 0);
    } else {
      d = det("img" + std::to_string(uniform_int(rng, 0, 1)),
              static_cast<int>(uniform_int(rng, 0, categories - 1)), random_box(rng), 0);
    }
    d.confidence = uniform_real(rng, 0.01, 1.0);
    in.dets.push_back(d);
  }
  return in;
}

TEST_CASE("iou examples") {
  const BBox a{0, 0, 2, 2};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BBox{3, 3, 4, 4}) == 0.0);
  CHECK(iou(a, BBox{2, 0, 4, 2}) == 0.0);
  CHECK(iou(a, BBox{1, 1, 3, 3}) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("property: iou is symmetric, bounded, translation invariant") {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const BBox a = random_box(rng);
    const BBox b = random_box(rng);
    const double v = iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(std::abs(v - iou(b, a)) < 1e-9);
    const double dx = uniform_real(rng, -50, 50);
    const double dy = uniform_real(rng, -50, 50);
    const BBox ta{a.x1 + dx, a.y1 + dy, a.x2 + dx, a.y2 + dy};
    const BBox tb{b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy};
    CHECK(std::abs(v - iou(ta, tb)) < 1e-9);
  }
}

TEST_CASE("matching exact detections") {
  const std::vector<GroundTruth> gts = {gt("a", 0, {0, 0, 2, 2}), gt("a", 0, {5, 5, 9, 9}),
                                        gt("b", 0, {1, 1, 4, 4})};
  std::vector<Detection> dets;
  for (const GroundTruth& g : gts) dets.push_back(det(g.image_id, 0, g.box, 0.9));
  const MatchResult m = match_detections(dets, gts, 0.5);
  CHECK(m.true_positives == 3);
  CHECK(m.false_negatives == 0);
  CHECK(std::all_of(m.is_tp.begin(), m.is_tp.end(), [](bool b) { return b; }));

  const MatchResult none = match_detections(std::vector<Detection>{}, gts, 0.5);
  CHECK(none.false_negatives == 3);
  CHECK(none.is_tp.empty());
}

TEST_CASE("greedy trace: the lower-confidence duplicate is a false positive") {
  const std::vector<GroundTruth> gts = {gt("a", 0, {0, 0, 10, 10})};
  const std::vector<Detection> dets = {det("a", 0, {0, 0, 10, 9}, 0.8),
                                       det("a", 0, {0, 0, 10, 10}, 0.9)};
  const MatchResult m = match_detections(dets, gts, 0.5);
  CHECK(m.order == std::vector<std::size_t>{1, 0});
  CHECK(m.is_tp == std::vector<bool>{true, false});
  CHECK(m.true_positives == 1);
  CHECK(m.false_negatives == 0);
}

TEST_CASE("matching tie rules and image separation") {
  // Two identical GT boxes: the tie goes to the lower index, the next
  // detection takes the other one.
  const std::vector<GroundTruth> twins = {gt("a", 0, {0, 0, 4, 4}), gt("a", 0, {0, 0, 4, 4})};
  const std::vector<Detection> pair = {det("a", 0, {0, 0, 4, 4}, 0.5),
                                       det("a", 0, {0, 0, 4, 4}, 0.5)};
  const MatchResult m = match_detections(pair, twins, 0.5);
  CHECK(m.order == std::vector<std::size_t>{0, 1});
  CHECK(m.true_positives == 2);

  const std::vector<Detection> other_image = {det("b", 0, {0, 0, 4, 4}, 0.9)};
  CHECK(match_detections(other_image, twins, 0.5).true_positives == 0);
}

TEST_CASE("matching validates its inputs") {
  const std::vector<GroundTruth> gts = {gt("a", 0, {0, 0, 1, 1})};
  const std::vector<Detection> dets = {det("a", 1, {0, 0, 1, 1}, 0.5)};
  CHECK_THROWS_AS(match_detections(dets, gts, 0.5), ValidationError);
  CHECK_THROWS_AS(match_detections(std::vector<Detection>{}, gts, 0.0), ValidationError);
  CHECK_THROWS_AS(match_detections(std::vector<Detection>{}, gts, 1.5), ValidationError);
}

TEST_CASE("pr_curve examples") {
  std::vector<bool> nine_one(9, true);
  nine_one.push_back(false);
  const std::vector<PRPoint> a = pr_curve(nine_one, 10);
  CHECK(a.back().precision == doctest::Approx(0.9));
  CHECK(a.back().recall == doctest::Approx(0.9));

  const std::vector<PRPoint> b = pr_curve({true, true}, 2);
  REQUIRE(b.size() == 2);
  CHECK(b[0].precision == 1.0);
  CHECK(b[0].recall == 0.5);
  CHECK(b[1].precision == 1.0);
  CHECK(b[1].recall == 1.0);

  const std::vector<PRPoint> c = pr_curve({false, true}, 1);
  CHECK(c[0].precision == 0.0);
  CHECK(c[0].recall == 0.0);
  CHECK(c[1].precision == 0.5);
  CHECK(c[1].recall == 1.0);

  const std::vector<PRPoint> d = pr_curve({true, false}, 0);
  CHECK(d[0].recall == 0.0);
  CHECK(d[1].recall == 0.0);
}

TEST_CASE("average precision examples") {
  CHECK(average_precision(pr_curve({true, true, true}, 3)) == 1.0);
  CHECK(average_precision(pr_curve({false, false}, 2)) == 0.0);
  CHECK(average_precision(std::vector<PRPoint>{}) == 0.0);
  CHECK(average_precision(pr_curve({false, true}, 1)) == 0.5);

  // [TP, FP, TP] over 2 GT: levels 0..50 see precision 1, levels 51..100
  // see the 2/3 envelope.
  const std::vector<bool> labels = {true, false, true};
  const double ap = average_precision(pr_curve(labels, 2));
  CHECK(ap == doctest::Approx((51.0 + 50.0 * 2.0 / 3.0) / 101.0).epsilon(1e-12));
  CHECK(ap == brute_force_ap(labels, 2));

  const std::vector<PRPoint> bad = {{1.0, 0.5}, {1.0, 0.2}};
  CHECK_THROWS_AS(average_precision(bad), ValidationError);
}

TEST_CASE("property: average precision equals the brute-force oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const Instance in = random_instance(rng);
    for (double t : {0.3, 0.5, 0.75}) {
      const MatchResult m = match_detections(in.dets, in.gts, t);
      const double ap =
          average_precision(pr_curve(m.is_tp, static_cast<std::int64_t>(in.gts.size())));
      CHECK(ap == brute_force_ap(m.is_tp, static_cast<std::int64_t>(in.gts.size())));
      CHECK(ap >= 0.0);
      CHECK(ap <= 1.0);
    }
  }
}

TEST_CASE("evaluate perfect detector") {
  const std::vector<GroundTruth> gts = {gt("a", 0, {0, 0, 2, 2}), gt("a", 1, {3, 3, 6, 7}),
                                        gt("b", 1, {1, 2, 5, 5})};
  std::vector<Detection> dets;
  for (const GroundTruth& g : gts) dets.push_back(det(g.image_id, g.category, g.box, 1.0));
  const EvalResult r = evaluate(dets, gts);
  CHECK(r.map50 == 1.0);
  CHECK(r.map5095 == 1.0);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.thresholds.size() == 10);
}

TEST_CASE("evaluate means over categories") {
  // category 0 is perfect; category 1 ranks a miss above its hit, AP 0.5
  const std::vector<GroundTruth> gts = {gt("a", 0, {0, 0, 2, 2}), gt("a", 1, {5, 5, 8, 8})};
  const std::vector<Detection> dets = {det("a", 0, {0, 0, 2, 2}, 0.9),
                                       det("a", 1, {20, 20, 21, 21}, 0.8),
                                       det("a", 1, {5, 5, 8, 8}, 0.7)};
  const EvalResult r = evaluate(dets, gts, {0.5});
  CHECK(r.per_category_ap.at(0).front() == 1.0);
  CHECK(r.per_category_ap.at(1).front() == 0.5);
  CHECK(r.map50 == 0.75);
  CHECK(r.map5095 == 0.75);

  const EvalResult single = evaluate(std::span(dets).subspan(1), std::span(gts).subspan(1), {0.5});
  CHECK(single.map50 == single.per_category_ap.at(1).front());
}

TEST_CASE("dataset precision and recall at 0.5") {
  std::vector<GroundTruth> gts;
  std::vector<Detection> dets;
  for (int i = 0; i < 10; ++i) {
    const BBox b{10.0 * i, 0, 10.0 * i + 5, 5};
    gts.push_back(gt("a", 0, b));
    if (i < 9) dets.push_back(det("a", 0, b, 0.9 - 0.01 * i));
  }
  dets.push_back(det("a", 0, {200, 200, 205, 205}, 0.5));
  const EvalResult r = evaluate(dets, gts);
  CHECK(r.true_positives == 9);
  CHECK(r.false_positives == 1);
  CHECK(r.false_negatives == 1);
  CHECK(r.precision == doctest::Approx(0.9));
  CHECK(r.recall == doctest::Approx(0.9));
}

TEST_CASE("evaluate edge cases") {
  const std::vector<GroundTruth> gts = {gt("a", 0, {0, 0, 2, 2})};
  const EvalResult empty = evaluate(std::vector<Detection>{}, gts);
  CHECK(empty.map50 == 0.0);
  CHECK_FALSE(empty.precision_defined);
  CHECK(empty.recall == 0.0);

  const std::vector<Detection> stray = {det("a", 0, {0, 0, 2, 2}, 0.9),
                                        det("a", 7, {0, 0, 2, 2}, 0.9)};
  const EvalResult with_stray = evaluate(stray, gts, {0.5});
  CHECK(with_stray.per_category_ap.at(7).front() == 0.0);
  CHECK(with_stray.map50 == 0.5);

  CHECK_THROWS_AS(evaluate(stray, std::vector<GroundTruth>{}), DegenerateInputError);
  CHECK_THROWS_AS(evaluate(stray, gts, {}), ValidationError);
  CHECK_THROWS_AS(evaluate(stray, gts, {0.0}), ValidationError);
}

TEST_CASE("property: evaluate invariants") {
  Rng rng(3);
  for (int trial = 0; trial < 150; ++trial) {
    Instance in = random_instance(rng, 3);
    const EvalResult base = evaluate(in.dets, in.gts);

    double mean = 0.0;
    for (const auto& [cat, aps] : base.per_category_ap) {
      for (double ap : aps) {
        CHECK(ap >= 0.0);
        CHECK(ap <= 1.0);
      }
      mean += std::accumulate(aps.begin(), aps.end(), 0.0) / aps.size();
    }
    CHECK(base.map5095 == doctest::Approx(mean / base.per_category_ap.size()).epsilon(1e-15));

    std::vector<Detection> shuffled = in.dets;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const EvalResult perm = evaluate(shuffled, in.gts);
    CHECK(perm.map50 == base.map50);
    CHECK(perm.map5095 == base.map5095);

    for (int cat = 0; cat < 3; ++cat) {
      std::vector<Detection> cd;
      std::vector<GroundTruth> cg;
      for (const Detection& d : in.dets) if (d.category == cat) cd.push_back(d);
      for (const GroundTruth& g : in.gts) if (g.category == cat) cg.push_back(g);
      std::int64_t prev_tp = -1;
      for (double t : {0.9, 0.7, 0.5, 0.3, 0.1, 0.01}) {
        const std::int64_t tp = match_detections(cd, cg, t).true_positives;
        CHECK(tp >= prev_tp);
        prev_tp = tp;
      }
    }

    // Duplicate a matched detection at no higher confidence. Boxes that
    // reach the threshold against more than one ground truth are skipped:
    // the copy could claim the second one.
    const EvalResult before = evaluate(in.dets, in.gts, {0.5});
    for (const Detection& d : in.dets) {
      int candidates = 0;
      bool matched = false;
      for (const GroundTruth& g : in.gts) {
        if (g.image_id == d.image_id && g.category == d.category && iou(g.box, d.box) >= 0.5) {
          ++candidates;
        }
      }
      std::vector<Detection> same_cat;
      std::vector<GroundTruth> same_gt;
      for (const Detection& e : in.dets) if (e.category == d.category) same_cat.push_back(e);
      for (const GroundTruth& g : in.gts) if (g.category == d.category) same_gt.push_back(g);
      const MatchResult m = match_detections(same_cat, same_gt, 0.5);
      for (std::size_t k = 0; k < m.order.size(); ++k) {
        const Detection& e = same_cat[m.order[k]];
        if (m.is_tp[k] && e.image_id == d.image_id && e.confidence == d.confidence) matched = true;
      }
      if (candidates != 1 || !matched) continue;
      std::vector<Detection> more = in.dets;
      Detection dup = d;
      dup.confidence = uniform_real(rng, 0.0, d.confidence);
      more.push_back(dup);
      const EvalResult after = evaluate(more, in.gts, {0.5});
      for (const auto& [cat, aps] : before.per_category_ap) {
        CHECK(after.per_category_ap.at(cat).front() <= aps.front());
      }
    }
  }
}

TEST_CASE("box files parse and report line numbers") {
  const std::vector<GroundTruth> gts = parse_ground_truth(
      "# image cat x1 y1 x2 y2\n"
      "img1 0 0 0 10 10\n"
      "\n"
      "img2 3 1.5 2 4 8.25\n");
  REQUIRE(gts.size() == 2);
  CHECK(gts[1].category == 3);
  CHECK(gts[1].box.x2 == 4.0);

  const std::vector<Detection> dets = parse_detections("img1 0 0 0 10 10 0.75\n");
  CHECK(dets[0].confidence == 0.75);

  auto line_of = [](auto fn) {
    try {
      fn();
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of([] { parse_ground_truth("a 0 0 0 1 1\na 0 0 0 1\n"); }) == 2);
  CHECK(line_of([] { parse_ground_truth("a x 0 0 1 1\n"); }) == 1);
  CHECK(line_of([] { parse_ground_truth("a 0.5 0 0 1 1\n"); }) == 1);
  CHECK(line_of([] { parse_ground_truth("a 0 2 0 1 1\n"); }) == 1);
  CHECK(line_of([] { parse_detections("\n\na 0 0 0 1 1 1.5\n"); }) == 3);
  CHECK_THROWS_AS(load_detections("/nonexistent/dets.txt"), IoError);
}

}  // namespace
}  // namespace fasternam
