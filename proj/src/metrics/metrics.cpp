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

#include "fuselab/metrics.hpp"

#include "fuselab/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace fuselab::metrics {

ConfusionCounts confusion(const Mask& pred, const Mask& gt) {
    if(!pred.same_dims(gt))
        throw DataError("prediction is " + std::to_string(pred.height()) + "x" + std::to_string(pred.width()) +
                        " but ground truth is " + std::to_string(gt.height()) + "x" + std::to_string(gt.width()));
    ConfusionCounts c;
    for(std::size_t i = 0; i < pred.size(); ++i) {
        const std::uint8_t p = pred[i];
        if(p != kBackground && p != kForeground)
            throw DataError("prediction is not binary (value " + std::to_string(p) + ")");
        const std::uint8_t g = gt[i];
        if(g == gt::kOutsideRoi || g == gt::kUnknown)
            continue;
        const bool positive = g == gt::kMotion;
        const bool predicted = p == kForeground;
        if(positive)
            ++(predicted ? c.tp : c.fn);
        else
            ++(predicted ? c.fp : c.tn);
    }
    return c;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

MetricVector metrics_from_counts(const ConfusionCounts& c) {
    if(c.total() == 0)
        throw DataError("cannot compute metrics from empty confusion counts");
    MetricVector m;
    m.re = ratio(c.tp, c.tp + c.fn);
    m.sp = ratio(c.tn, c.tn + c.fp);
    m.fpr = ratio(c.fp, c.fp + c.tn);
    m.fnr = ratio(c.fn, c.tp + c.fn);
    m.pwc = 100.0 * static_cast<double>(c.fn + c.fp) / static_cast<double>(c.total());
    m.pr = ratio(c.tp, c.tp + c.fp);
    m.fm = (m.re + m.pr) > 0.0 ? 2.0 * (m.re * m.pr) / (m.re + m.pr) : 0.0;
    return m;
}

MetricVector mean_of(const std::vector<MetricVector>& vs) {
    if(vs.empty())
        throw DataError("cannot average an empty list of metric vectors");
    std::array<double, 7> acc{};
    for(const auto& v : vs) {
        const auto vals = v.values();
        for(std::size_t i = 0; i < 7; ++i)
            acc[i] += vals[i];
    }
    for(auto& a : acc)
        a /= static_cast<double>(vs.size());
    return MetricVector::from_values(acc);
}

ScoreTree aggregate(std::vector<VideoResult> videos) {
    if(videos.empty())
        throw DataError("no videos to aggregate");
    std::stable_sort(videos.begin(), videos.end(), [](const VideoResult& a, const VideoResult& b) {
        return a.category != b.category ? a.category < b.category : a.video < b.video;
    });
    ScoreTree tree;
    for(auto& v : videos) {
        if(tree.categories.empty() || tree.categories.back().name != v.category)
            tree.categories.push_back(CategoryScore{v.category, {}, {}});
        tree.categories.back().videos.push_back(std::move(v));
    }
    std::vector<MetricVector> category_means;
    for(auto& cat : tree.categories) {
        std::vector<MetricVector> vs;
        for(const auto& v : cat.videos)
            vs.push_back(v.metrics);
        cat.mean = mean_of(vs);
        category_means.push_back(cat.mean);
    }
    tree.overall = mean_of(category_means);
    return tree;
}

ReportFormat parse_report_format(std::string_view name) {
    if(name == "csv")
        return ReportFormat::Csv;
    if(name == "markdown" || name == "md")
        return ReportFormat::Markdown;
    throw ConfigError("unknown report format '" + std::string(name) + "' (expected csv or markdown)");
}

std::string report(const ScoreTree& tree, ReportFormat format) {
    if(tree.categories.empty())
        throw DataError("cannot report an empty score tree");
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    auto row = [&](const std::string& label, const MetricVector& m) {
        const auto vals = m.values();
        if(format == ReportFormat::Csv) {
            os << label;
            for(double v : vals)
                os << ',' << v;
            os << '\n';
        } else {
            os << "| " << label << " |";
            for(double v : vals)
                os << ' ' << v << " |";
            os << '\n';
        }
    };
    if(format == ReportFormat::Csv) {
        os << "category";
        for(auto n : MetricVector::kNames)
            os << ',' << n;
        os << '\n';
    } else {
        os << "| category |";
        for(auto n : MetricVector::kNames)
            os << ' ' << n << " |";
        os << "\n|---|";
        for(std::size_t i = 0; i < MetricVector::kNames.size(); ++i)
            os << "---|";
        os << '\n';
    }
    for(const auto& cat : tree.categories)
        row(cat.name, cat.mean);
    row("Overall", tree.overall);
    return os.str();
}

std::map<std::string, double> average_ranks(const std::map<std::string, MetricVector>& methods) {
    std::map<std::string, double> ranks;
    if(methods.empty())
        return ranks;
    std::vector<std::pair<std::string, std::array<double, 7>>> rows;
    for(const auto& [name, m] : methods) {
        rows.emplace_back(name, m.values());
        ranks[name] = 0.0;
    }
    for(std::size_t k = 0; k < 7; ++k) {
        const bool higher = MetricVector::kHigherIsBetter[k];
        for(const auto& [name, vals] : rows) {
            std::size_t better = 0, equal = 0;
            for(const auto& other : rows) {
                const double a = vals[k], b = other.second[k];
                if(a == b)
                    ++equal;
                else if(higher ? b > a : b < a)
                    ++better;
            }
            // `equal` counts this method too; tied methods share the mean rank
            ranks[name] += static_cast<double>(better) + (static_cast<double>(equal) + 1.0) / 2.0;
        }
    }
    for(auto& [name, r] : ranks)
        r /= 7.0;
    return ranks;
}

namespace {

using nlohmann::json;

json metrics_json(const MetricVector& m) {
    json j = json::object();
    const auto vals = m.values();
    for(std::size_t i = 0; i < 7; ++i)
        j[std::string(MetricVector::kNames[i])] = vals[i];
    return j;
}

MetricVector metrics_from_json(const json& j) {
    std::array<double, 7> v{};
    for(std::size_t i = 0; i < 7; ++i)
        v[i] = j.at(std::string(MetricVector::kNames[i])).get<double>();
    return MetricVector::from_values(v);
}

}  // namespace

std::string score_tree_to_json(const ScoreTree& tree) {
    json j;
    j["format"] = "fuselab-scores";
    j["version"] = 1;
    json cats = json::array();
    for(const auto& cat : tree.categories) {
        json c;
        c["name"] = cat.name;
        c["mean"] = metrics_json(cat.mean);
        json vids = json::array();
        for(const auto& v : cat.videos) {
            json vj;
            vj["name"] = v.video;
            vj["metrics"] = metrics_json(v.metrics);
            if(v.counts)
                vj["counts"] = {{"TP", v.counts->tp}, {"FP", v.counts->fp}, {"TN", v.counts->tn}, {"FN", v.counts->fn}};
            vids.push_back(std::move(vj));
        }
        c["videos"] = std::move(vids);
        cats.push_back(std::move(c));
    }
    j["categories"] = std::move(cats);
    j["overall"] = metrics_json(tree.overall);
    return j.dump(2) + "\n";
}

ScoreTree score_tree_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if(j.at("format").get<std::string>() != "fuselab-scores")
            throw FormatError("not a fuselab score file");
        if(j.at("version").get<int>() != 1)
            throw VersionError(j.at("version").get<std::uint32_t>(), 1);
        std::vector<VideoResult> videos;
        for(const auto& c : j.at("categories")) {
            for(const auto& v : c.at("videos")) {
                VideoResult r{c.at("name").get<std::string>(), v.at("name").get<std::string>(),
                              metrics_from_json(v.at("metrics")), std::nullopt};
                if(v.contains("counts")) {
                    const auto& k = v.at("counts");
                    r.counts = ConfusionCounts{k.at("TP").get<std::uint64_t>(), k.at("FP").get<std::uint64_t>(),
                                               k.at("TN").get<std::uint64_t>(), k.at("FN").get<std::uint64_t>()};
                }
                videos.push_back(std::move(r));
            }
        }
        return aggregate(std::move(videos));
    } catch(const json::exception& e) {
        throw FormatError(std::string("malformed score file: ") + e.what());
    }
}

}  // namespace fuselab::metrics
