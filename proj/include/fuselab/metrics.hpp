// Copyright 2026 The fuselab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "fuselab/image.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fuselab::metrics {

/// Pixel tallies over evaluated (non-ignored) pixels; additive across frames.
struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }
    friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) { return a += b; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Compares a binary prediction against CDnet-encoded ground truth:
/// 255 is positive, 0 and 50 negative, 85 and 170 are skipped. Other gt values
/// are treated as negative. Throws DataError on a dims mismatch or non-binary prediction.
ConfusionCounts confusion(const Mask& pred, const Mask& gt);

/// The seven change-detection metrics, in report column order.
struct MetricVector {
    double re = 0.0;
    double sp = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
    double pwc = 0.0;
    double pr = 0.0;
    double fm = 0.0;

    static constexpr std::array<std::string_view, 7> kNames{"Re", "Sp", "FPR", "FNR", "PWC", "Pr", "FM"};
    /// True where a larger value is better (Re, Sp, Pr, FM).
    static constexpr std::array<bool, 7> kHigherIsBetter{true, true, false, false, false, true, true};

    std::array<double, 7> values() const { return {re, sp, fpr, fnr, pwc, pr, fm}; }
    static MetricVector from_values(const std::array<double, 7>& v) {
        return MetricVector{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
    }
    friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

/// Zero denominators yield 0 for the affected ratio (and FM = 0 when Re + Pr = 0).
/// Throws DataError when every count is zero.
MetricVector metrics_from_counts(const ConfusionCounts& c);

/// Unweighted per-metric arithmetic mean. Throws DataError on an empty list.
MetricVector mean_of(const std::vector<MetricVector>& vs);

struct VideoResult {
    std::string category;
    std::string video;
    MetricVector metrics;
    std::optional<ConfusionCounts> counts;
};

struct CategoryScore {
    std::string name;
    std::vector<VideoResult> videos;
    MetricVector mean;
};

/// video -> category mean -> overall mean of category means.
struct ScoreTree {
    std::vector<CategoryScore> categories;  // sorted by name
    MetricVector overall;
};

/// Groups videos by category (sorted by category, then video name) and
/// averages at each level. Throws DataError on an empty input.
ScoreTree aggregate(std::vector<VideoResult> videos);

enum class ReportFormat { Csv, Markdown };
/// Accepts "csv" or "markdown"/"md"; throws ConfigError otherwise.
ReportFormat parse_report_format(std::string_view name);

/// One row per category (sorted) then "Overall", seven metric columns with 4 decimals.
std::string report(const ScoreTree& tree, ReportFormat format);

/// Per-metric ranks (1 = best, ties share the mean rank) averaged over the
/// seven metrics, for comparing several methods' overall vectors.
std::map<std::string, double> average_ranks(const std::map<std::string, MetricVector>& methods);

/// JSON persistence of a score tree (used between `eval` and `report`).
std::string score_tree_to_json(const ScoreTree& tree);
ScoreTree score_tree_from_json(const std::string& text);

}  // namespace fuselab::metrics
