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

#include "fuselab/dataset.hpp"

#include "fuselab/error.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace fuselab::dataset {

namespace {

std::string lower_ext(const fs::path& p) {
    std::string e = p.extension().string();
    for(auto& c : e)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e;
}

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t frame) {
    return mix(mix(mix(seed) ^ stream) ^ frame);
}

}  // namespace

Frame load_image(const fs::path& path) {
    const std::string ext = lower_ext(path);
    if(ext != ".png" && ext != ".pgm" && ext != ".jpg" && ext != ".jpeg")
        throw DataError("unsupported image format '" + ext + "': " + path.string());
    std::error_code ec;
    if(!fs::is_regular_file(path, ec))
        throw DataError("image not found: " + path.string());
    cv::Mat m;
    try {
        m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    } catch(const cv::Exception& e) {
        throw DataError("cannot decode " + path.string() + ": " + e.what());
    }
    if(m.empty())
        throw DataError("cannot decode " + path.string());
    if(m.depth() != CV_8U)
        throw DataError("not an 8-bit image: " + path.string());
    const auto h = static_cast<std::size_t>(m.rows);
    const auto w = static_cast<std::size_t>(m.cols);
    Frame out(h, w);
    const int ch = m.channels();
    if(ch != 1 && ch != 3 && ch != 4)
        throw DataError("unsupported channel count " + std::to_string(ch) + ": " + path.string());
    for(std::size_t y = 0; y < h; ++y) {
        const std::uint8_t* row = m.ptr<std::uint8_t>(static_cast<int>(y));
        for(std::size_t x = 0; x < w; ++x) {
            const std::uint8_t* px = row + x * static_cast<std::size_t>(ch);
            // OpenCV stores colour as B, G, R[, A]
            out(y, x) = ch == 1 ? px[0] : luma(px[2], px[1], px[0]);
        }
    }
    return out;
}

void save_image(const Image& img, const fs::path& path) {
    const std::string ext = lower_ext(path);
    if(ext != ".png" && ext != ".pgm")
        throw DataError("unsupported output format '" + ext + "': " + path.string());
    if(img.empty())
        throw DataError("cannot write an empty image: " + path.string());
    cv::Mat m(static_cast<int>(img.height()), static_cast<int>(img.width()), CV_8UC1,
              const_cast<std::uint8_t*>(img.pixels().data()));
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), m);
    } catch(const cv::Exception& e) {
        throw DataError("cannot write " + path.string() + ": " + e.what());
    }
    if(!ok)
        throw DataError("cannot write " + path.string());
}

void save_mask(const Mask& mask, const fs::path& path) {
    if(!is_binary(mask))
        throw DataError("refusing to write a non-binary mask: " + path.string());
    save_image(mask, path);
}

std::vector<NumberedFile> list_numbered(const fs::path& dir, const std::string& prefix,
                                        const std::vector<std::string>& extensions) {
    std::error_code ec;
    if(!fs::is_directory(dir, ec))
        throw DataError("directory not found: " + dir.string());
    std::vector<NumberedFile> out;
    for(const auto& entry : fs::directory_iterator(dir)) {
        if(!entry.is_regular_file())
            continue;
        const std::string ext = lower_ext(entry.path());
        if(std::find(extensions.begin(), extensions.end(), ext) == extensions.end())
            continue;
        const std::string stem = entry.path().stem().string();
        if(stem.size() <= prefix.size() || stem.compare(0, prefix.size(), prefix) != 0)
            continue;
        const std::string digits = stem.substr(prefix.size());
        if(!std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            continue;
        out.push_back({static_cast<std::size_t>(std::stoull(digits)), entry.path()});
    }
    std::sort(out.begin(), out.end(), [](const NumberedFile& a, const NumberedFile& b) {
        return a.number != b.number ? a.number < b.number : a.path < b.path;
    });
    for(std::size_t i = 1; i < out.size(); ++i)
        if(out[i].number == out[i - 1].number)
            throw DataError("duplicate frame number " + std::to_string(out[i].number) + " in " + dir.string());
    return out;
}

std::array<std::size_t, 2> read_roi(const fs::path& path) {
    std::ifstream in(path);
    if(!in)
        throw DataError("cannot read " + path.string());
    long long first = 0, last = 0;
    if(!(in >> first >> last) || first < 0 || last < first)
        throw DataError("malformed temporal ROI in " + path.string());
    return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

std::vector<std::string> CdnetIndex::categories() const {
    std::vector<std::string> out;
    for(const auto& v : videos)
        if(out.empty() || out.back() != v.category)
            out.push_back(v.category);
    return out;
}

CdnetIndex scan_cdnet(const fs::path& root) {
    std::error_code ec;
    if(!fs::is_directory(root, ec))
        throw DataError("dataset root not found: " + root.string());
    std::vector<fs::path> cats;
    for(const auto& e : fs::directory_iterator(root))
        if(e.is_directory())
            cats.push_back(e.path());
    std::sort(cats.begin(), cats.end());
    CdnetIndex index;
    for(const auto& cat : cats) {
        std::vector<fs::path> vids;
        for(const auto& e : fs::directory_iterator(cat))
            if(e.is_directory() && fs::is_directory(e.path() / "input"))
                vids.push_back(e.path());
        std::sort(vids.begin(), vids.end());
        for(const auto& vdir : vids) {
            VideoEntry v;
            v.category = cat.filename().string();
            v.name = vdir.filename().string();
            v.dir = vdir;
            const std::string label = v.category + "/" + v.name;
            if(!fs::is_directory(vdir / "groundtruth"))
                throw DataError("video " + label + ": missing groundtruth directory");
            if(!fs::is_regular_file(vdir / "temporalROI.txt"))
                throw DataError("video " + label + ": missing temporalROI.txt");
            std::array<std::size_t, 2> roi{};
            try {
                roi = read_roi(vdir / "temporalROI.txt");
            } catch(const DataError& e) {
                throw DataError("video " + label + ": " + e.what());
            }
            const auto inputs = list_numbered(vdir / "input", "in", kInputExtensions);
            const auto gts = list_numbered(vdir / "groundtruth", "gt", {".png"});
            if(inputs.empty())
                throw DataError("video " + label + ": no input frames");
            if(inputs.size() != gts.size())
                throw DataError("video " + label + ": " + std::to_string(inputs.size()) + " input frames but " +
                                std::to_string(gts.size()) + " ground-truth frames");
            for(std::size_t i = 0; i < inputs.size(); ++i) {
                if(inputs[i].number != gts[i].number)
                    throw DataError("video " + label + ": input frame " + std::to_string(inputs[i].number) +
                                    " has no matching ground truth");
                v.frames.push_back({inputs[i].number, inputs[i].path, gts[i].path});
            }
            if(roi[0] < v.frames.front().number || roi[1] > v.frames.back().number)
                throw DataError("video " + label + ": temporal ROI " + std::to_string(roi[0]) + ".." +
                                std::to_string(roi[1]) + " lies outside frames " +
                                std::to_string(v.frames.front().number) + ".." +
                                std::to_string(v.frames.back().number));
            v.roi_first = roi[0];
            v.roi_last = roi[1];
            index.videos.push_back(std::move(v));
        }
    }
    if(index.videos.empty())
        throw DataError("no videos found under " + root.string());
    return index;
}

std::vector<std::size_t> select_training_frames(const std::vector<Mask>& gts, double min_fg_fraction) {
    std::vector<std::size_t> out;
    for(std::size_t f = 0; f < gts.size(); ++f) {
        std::size_t fg = 0, counted = 0;
        for(const auto v : gts[f].pixels()) {
            if(v == gt::kOutsideRoi || v == gt::kUnknown)
                continue;
            ++counted;
            fg += v == gt::kMotion;
        }
        if(counted > 0 && static_cast<double>(fg) >= min_fg_fraction * static_cast<double>(counted))
            out.push_back(f);
    }
    return out;
}

void SyntheticConfig::validate() const {
    if(width < 1 || height < 1 || frames < 1)
        throw ConfigError("synthetic frame size and count must be positive");
    if(!(noise_sigma >= 0.0))
        throw ConfigError("noise sigma must be non-negative");
    if(objects.empty()) {
        if(object_count < 0)
            throw ConfigError("object count must be non-negative");
        if(min_size < 1 || max_size < min_size)
            throw ConfigError("need 1 <= min_size <= max_size");
        if(max_size > width || max_size > height)
            throw ConfigError("objects larger than frame (" + std::to_string(max_size) + " vs " +
                              std::to_string(width) + "x" + std::to_string(height) + ")");
        if(!(max_speed >= 0.0))
            throw ConfigError("max speed must be non-negative");
    }
    for(const auto& o : objects) {
        if(o.width < 1 || o.height < 1)
            throw ConfigError("object size must be positive");
        if(o.width > width || o.height > height)
            throw ConfigError("objects larger than frame (" + std::to_string(o.width) + "x" +
                              std::to_string(o.height) + " vs " + std::to_string(width) + "x" +
                              std::to_string(height) + ")");
        if(o.x < 0 || o.y < 0 || o.x > width - o.width || o.y > height - o.height)
            throw ConfigError("object starts outside the frame");
    }
    for(const auto& c : corruptions) {
        if(c.dilate < 0 || c.erode < 0)
            throw ConfigError("corruption radii must be non-negative");
        if(!(c.flip >= 0.0 && c.flip <= 1.0) || !(c.dropout >= 0.0 && c.dropout <= 1.0))
            throw ConfigError("corruption probabilities must lie in [0, 1]");
    }
}

namespace {

Mask morph(const Mask& m, int radius, bool grow) {
    if(radius <= 0)
        return m;
    const auto h = static_cast<std::ptrdiff_t>(m.height());
    const auto w = static_cast<std::ptrdiff_t>(m.width());
    const std::uint8_t hit = grow ? kForeground : kBackground;
    // separable square window: rows, then columns
    Mask tmp = m, out = m;
    for(std::ptrdiff_t y = 0; y < h; ++y)
        for(std::ptrdiff_t x = 0; x < w; ++x) {
            bool any = false;
            for(std::ptrdiff_t xx = std::max<std::ptrdiff_t>(0, x - radius); xx <= std::min(w - 1, x + radius) && !any; ++xx)
                any = m(static_cast<std::size_t>(y), static_cast<std::size_t>(xx)) == hit;
            tmp(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = any ? hit : static_cast<std::uint8_t>(255 - hit);
        }
    for(std::ptrdiff_t y = 0; y < h; ++y)
        for(std::ptrdiff_t x = 0; x < w; ++x) {
            bool any = false;
            for(std::ptrdiff_t yy = std::max<std::ptrdiff_t>(0, y - radius); yy <= std::min(h - 1, y + radius) && !any; ++yy)
                any = tmp(static_cast<std::size_t>(yy), static_cast<std::size_t>(x)) == hit;
            out(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = any ? hit : static_cast<std::uint8_t>(255 - hit);
        }
    return out;
}

void reflect(double& pos, double& vel, double limit) {
    // limit >= 0 is the largest admissible coordinate
    for(int guard = 0; guard < 8 && (pos < 0.0 || pos > limit); ++guard) {
        if(pos < 0.0) {
            pos = -pos;
            vel = -vel;
        } else if(pos > limit) {
            pos = 2.0 * limit - pos;
            vel = -vel;
        }
    }
    pos = std::clamp(pos, 0.0, limit);
}

}  // namespace

Mask dilate(const Mask& m, int radius) { return morph(m, radius, true); }
Mask erode(const Mask& m, int radius) { return morph(m, radius, false); }

SyntheticVideo synth_generate(const SyntheticConfig& cfg) {
    cfg.validate();
    const auto W = static_cast<std::size_t>(cfg.width);
    const auto H = static_cast<std::size_t>(cfg.height);
    SyntheticVideo out;

    out.objects = cfg.objects;
    if(out.objects.empty()) {
        std::mt19937_64 rng(stream_seed(cfg.seed, 1, 0));
        std::uniform_int_distribution<int> size(cfg.min_size, cfg.max_size);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<int> shade(170, 230);
        for(int i = 0; i < cfg.object_count; ++i) {
            SyntheticObject o{};
            o.width = size(rng);
            o.height = size(rng);
            o.x = unit(rng) * (cfg.width - o.width);
            o.y = unit(rng) * (cfg.height - o.height);
            // speed in [max/2, max] per axis, random sign
            o.vx = (0.5 + 0.5 * unit(rng)) * cfg.max_speed * ((rng() & 1u) ? 1.0 : -1.0);
            o.vy = (0.5 + 0.5 * unit(rng)) * cfg.max_speed * ((rng() & 1u) ? 1.0 : -1.0);
            o.intensity = static_cast<std::uint8_t>(shade(rng));
            out.objects.push_back(o);
        }
    }

    // static background texture
    std::vector<double> background(W * H);
    {
        std::mt19937_64 rng(stream_seed(cfg.seed, 2, 0));
        std::uniform_real_distribution<double> phase(0.0, 6.283185307179586);
        const double p1 = phase(rng), p2 = phase(rng);
        for(std::size_t y = 0; y < H; ++y)
            for(std::size_t x = 0; x < W; ++x)
                background[y * W + x] = 80.0 + 25.0 * std::sin(0.35 * static_cast<double>(x) + p1) +
                                        15.0 * std::cos(0.27 * static_cast<double>(y) + p2);
    }

    auto objs = out.objects;
    out.frames.reserve(static_cast<std::size_t>(cfg.frames));
    out.groundtruth.reserve(static_cast<std::size_t>(cfg.frames));
    for(int t = 0; t < cfg.frames; ++t) {
        std::vector<double> frame = background;
        Mask gt(H, W, gt::kStatic);
        for(const auto& o : objs) {
            const auto x0 = static_cast<std::size_t>(std::lround(o.x));
            const auto y0 = static_cast<std::size_t>(std::lround(o.y));
            for(std::size_t y = y0; y < y0 + static_cast<std::size_t>(o.height); ++y)
                for(std::size_t x = x0; x < x0 + static_cast<std::size_t>(o.width); ++x) {
                    frame[y * W + x] = o.intensity;
                    gt(y, x) = gt::kMotion;
                }
        }
        Frame img(H, W);
        std::mt19937_64 rng(stream_seed(cfg.seed, 3, static_cast<std::uint64_t>(t)));
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma > 0.0 ? cfg.noise_sigma : 1.0);
        for(std::size_t i = 0; i < frame.size(); ++i) {
            const double v = frame[i] + (cfg.noise_sigma > 0.0 ? noise(rng) : 0.0);
            img[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
        out.frames.push_back(std::move(img));
        out.groundtruth.push_back(std::move(gt));

        for(auto& o : objs) {
            o.x += o.vx;
            o.y += o.vy;
            reflect(o.x, o.vx, static_cast<double>(cfg.width - o.width));
            reflect(o.y, o.vy, static_cast<double>(cfg.height - o.height));
        }
    }

    out.candidates.resize(cfg.corruptions.size());
    for(std::size_t g = 0; g < cfg.corruptions.size(); ++g) {
        const auto& c = cfg.corruptions[g];
        auto& stream = out.candidates[g];
        stream.reserve(out.groundtruth.size());
        for(std::size_t t = 0; t < out.groundtruth.size(); ++t) {
            Mask m = erode(dilate(out.groundtruth[t], c.dilate), c.erode);
            std::mt19937_64 rng(stream_seed(cfg.seed, 100 + g, t));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            if(c.flip > 0.0)
                for(auto& v : m.pixels())
                    if(unit(rng) < c.flip)
                        v = static_cast<std::uint8_t>(255 - v);
            if(c.dropout > 0.0 && unit(rng) < c.dropout)
                m = Mask(H, W, kBackground);
            stream.push_back(std::move(m));
        }
    }
    return out;
}

std::string numbered_name(const std::string& prefix, std::size_t number, const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", number);
    return prefix + buf + ext;
}

void write_synthetic(const SyntheticVideo& video, const SyntheticConfig& cfg, const fs::path& root,
                     const std::string& category, const std::string& name) {
    const fs::path dir = root / category / name;
    fs::create_directories(dir / "input");
    fs::create_directories(dir / "groundtruth");
    for(std::size_t t = 0; t < video.frames.size(); ++t) {
        save_image(video.frames[t], dir / "input" / numbered_name("in", t + 1, ".png"));
        save_image(video.groundtruth[t], dir / "groundtruth" / numbered_name("gt", t + 1, ".png"));
    }
    for(std::size_t g = 0; g < video.candidates.size(); ++g) {
        const fs::path cdir = dir / "candidates" / cfg.corruptions.at(g).name;
        fs::create_directories(cdir);
        for(std::size_t t = 0; t < video.candidates[g].size(); ++t)
            save_mask(video.candidates[g][t], cdir / numbered_name("bin", t + 1, ".png"));
    }
    std::ofstream roi(dir / "temporalROI.txt");
    roi << 1 << ' ' << video.frames.size() << '\n';
    if(!roi)
        throw DataError("cannot write " + (dir / "temporalROI.txt").string());
}

}  // namespace fuselab::dataset
