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
#include "fuselab/metrics.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

#include <doctest.h>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <fstream>
#include <functional>

using namespace fuselab;
using namespace fuselab::dataset;
using fuselab::testing::TempDir;

namespace {

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

/// category/video with `frames` frames numbered from 1 and the given ROI text.
void make_video(const fs::path& root, const std::string& cat, const std::string& vid, std::size_t frames,
                const std::string& roi = "1 3") {
    const fs::path dir = root / cat / vid;
    fs::create_directories(dir / "input");
    fs::create_directories(dir / "groundtruth");
    for(std::size_t i = 1; i <= frames; ++i) {
        save_image(Frame(4, 4, 100), dir / "input" / numbered_name("in", i, ".png"));
        save_image(Mask(4, 4, 0), dir / "groundtruth" / numbered_name("gt", i, ".png"));
    }
    if(!roi.empty())
        write_file(dir / "temporalROI.txt", roi + "\n");
}

std::string error_text(const std::function<void()>& fn) {
    try {
        fn();
    } catch(const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("mask PNG and PGM round trips are bitwise") {
    TempDir dir("io");
    Mask m(7, 5);
    for(std::size_t i = 0; i < m.size(); i += 3)
        m[i] = 255;
    save_mask(m, dir / "m.png");
    CHECK(load_image(dir / "m.png") == m);
    save_mask(m, dir / "m.pgm");
    CHECK(load_image(dir / "m.pgm") == m);
    Frame gray(3, 3);
    for(std::size_t i = 0; i < 9; ++i)
        gray[i] = static_cast<std::uint8_t>(i * 28);
    save_image(gray, dir / "g.png");
    CHECK(load_image(dir / "g.png") == gray);
    CHECK_THROWS_AS(save_mask(gray, dir / "bad.png"), DataError);
    CHECK_FALSE(fs::exists(dir / "bad.png"));
}

TEST_CASE("load_image: errors for missing, unsupported and corrupt files") {
    TempDir dir("ioerr");
    CHECK_THROWS_AS(load_image(dir / "nope.png"), DataError);
    write_file(dir / "x.bmp", "BM");
    CHECK_THROWS_AS(load_image(dir / "x.bmp"), DataError);
    write_file(dir / "broken.png", "not a png at all");
    CHECK_THROWS_AS(load_image(dir / "broken.png"), DataError);
    CHECK_THROWS_AS(save_image(Mask(2, 2), dir / "x.jpg"), DataError);
}

TEST_CASE("load_image: colour input becomes single-channel luma") {
    TempDir dir("color");
    cv::Mat bgr(3, 4, CV_8UC3, cv::Scalar(30, 200, 90));  // B, G, R
    cv::imwrite((dir / "c.png").string(), bgr);
    const Frame f = load_image(dir / "c.png");
    CHECK(f.height() == 3);
    CHECK(f.width() == 4);
    CHECK(f(0, 0) == luma(90, 200, 30));
    CHECK(f(2, 3) == 148);  // 0.299*90 + 0.587*200 + 0.114*30 = 147.53
    cv::imwrite((dir / "c.jpg").string(), bgr);
    const Frame j = load_image(dir / "c.jpg");
    CHECK(j.height() == 3);
    CHECK(j.width() == 4);
    CHECK(std::abs(int(j(1, 1)) - 148) <= 3);
}

TEST_CASE("resize_mask_nn: binarity, identity, and constant round trip") {
    Mask checker(2, 2, std::vector<std::uint8_t>{0, 255, 255, 0});
    const Mask big = resize_mask_nn(checker, 224, 224);
    CHECK(is_binary(big));
    CHECK(big(0, 0) == 0);
    CHECK(big(0, 223) == 255);
    CHECK(big(111, 111) == 0);
    CHECK(big(112, 111) == 255);
    std::mt19937_64 rng(1);
    auto [p, g] = testing::random_pair(13, 9, rng);
    CHECK(resize_mask_nn(g, 13, 9) == g);
    const Mask c(37, 53, 255);
    CHECK(resize_mask_nn(resize_mask_nn(c, 5, 7), 37, 53) == c);
    CHECK_THROWS(resize_mask_nn(c, 0, 5));
}

TEST_CASE("scan_cdnet: two categories with one video each") {
    TempDir root("scan");
    make_video(root.path(), "baseline", "highway", 3);
    make_video(root.path(), "shadow", "cubicle", 3, "2 3");
    write_file(root / "README.txt", "ignored");
    const auto idx = scan_cdnet(root.path());
    REQUIRE(idx.videos.size() == 2);
    CHECK(idx.categories() == std::vector<std::string>{"baseline", "shadow"});
    const auto& v = idx.videos[1];
    CHECK(v.name == "cubicle");
    CHECK(v.frames.size() == 3);
    CHECK(v.frames[0].number == 1);
    CHECK(v.frames[2].groundtruth.filename() == "gt000003.png");
    CHECK_FALSE(v.evaluable(1));
    CHECK(v.evaluable(2));
    CHECK(v.evaluable(3));
}

TEST_CASE("scan_cdnet: ROI bounds mark frames evaluable") {
    VideoEntry v;
    v.roi_first = 470;
    v.roi_last = 1700;
    CHECK_FALSE(v.evaluable(469));
    CHECK(v.evaluable(470));
    CHECK(v.evaluable(1700));
    CHECK_FALSE(v.evaluable(1701));
}

TEST_CASE("scan_cdnet: errors name the offending video") {
    TempDir root("scanerr");
    make_video(root.path(), "cat", "noroi", 2, "");
    CHECK(error_text([&] { scan_cdnet(root.path()); }).find("cat/noroi") != std::string::npos);
    CHECK(error_text([&] { scan_cdnet(root.path()); }).find("temporalROI") != std::string::npos);

    TempDir root2("scanerr2");
    make_video(root2.path(), "cat", "nogt", 2, "1 2");
    fs::remove_all(root2 / "cat/nogt/groundtruth");
    CHECK(error_text([&] { scan_cdnet(root2.path()); }).find("cat/nogt: missing groundtruth") != std::string::npos);

    TempDir root3("scanerr3");
    make_video(root3.path(), "cat", "gap", 3, "1 3");
    fs::remove(root3 / "cat/gap/groundtruth/gt000002.png");
    CHECK_THROWS_AS(scan_cdnet(root3.path()), DataError);

    TempDir root4("scanerr4");
    make_video(root4.path(), "cat", "badroi", 3, "1 9");
    CHECK(error_text([&] { scan_cdnet(root4.path()); }).find("cat/badroi") != std::string::npos);
    write_file(root4 / "cat/badroi/temporalROI.txt", "garbage");
    CHECK_THROWS_AS(scan_cdnet(root4.path()), DataError);

    TempDir empty("scanempty");
    CHECK_THROWS_AS(scan_cdnet(empty.path()), DataError);
    CHECK_THROWS_AS(scan_cdnet(empty / "missing"), DataError);
}

TEST_CASE("list_numbered: filters by prefix and extension, sorts by number") {
    TempDir dir("list");
    for(const char* n : {"bin000010.png", "bin000002.png", "bin000003.txt", "gt000001.png", "binx00001.png"})
        write_file(dir / n, "");
    const auto files = list_numbered(dir.path(), "bin", {".png"});
    REQUIRE(files.size() == 2);
    CHECK(files[0].number == 2);
    CHECK(files[1].number == 10);
    write_file(dir / "bin2.png", "");
    CHECK_THROWS_AS(list_numbered(dir.path(), "bin", {".png"}), DataError);
}

TEST_CASE("select_training_frames: thresholds on non-ignored foreground share") {
    Mask empty(10, 10, 0);
    Mask tenth(10, 10, 0);
    for(std::size_t i = 0; i < 10; ++i)
        tenth[i] = 255;
    Mask ignored(10, 10, 85);
    Mask tiny(10, 10, 0);
    tiny[0] = 255;  // 1% foreground
    CHECK(select_training_frames({empty, empty}).empty());
    CHECK(select_training_frames({empty, tenth, ignored, tiny}) == std::vector<std::size_t>{1, 3});
    CHECK(select_training_frames({empty, tenth, ignored, tiny}, 0.05) == std::vector<std::size_t>{1});
    CHECK(select_training_frames({empty, tenth, ignored, tiny}, 0.0) == std::vector<std::size_t>{0, 1, 3});
    // outside-ROI pixels do not dilute the share
    Mask mostly_outside(10, 10, 85);
    mostly_outside[0] = 255;
    mostly_outside[1] = 0;
    CHECK(select_training_frames({mostly_outside}, 0.5) == std::vector<std::size_t>{0});
}

TEST_CASE("synth_generate: deterministic and exact ground truth") {
    SyntheticConfig cfg;
    cfg.frames = 30;
    const auto a = synth_generate(cfg);
    const auto b = synth_generate(cfg);
    CHECK(a.frames == b.frames);
    CHECK(a.groundtruth == b.groundtruth);
    CHECK(a.candidates == b.candidates);
    cfg.seed = 43;
    CHECK(synth_generate(cfg).frames != a.frames);

    SyntheticConfig one;
    one.frames = 120;
    one.objects = {{12, 7, 3.0, 40.0, 2.5, -1.5, 220}};
    const auto v = synth_generate(one);
    for(const auto& gt : v.groundtruth) {
        std::size_t fg = 0;
        for(auto p : gt.pixels())
            fg += p == 255;
        REQUIRE(fg == 12u * 7u);
    }
    CHECK(testing::sequence_fm(v.groundtruth, v.groundtruth, 0, v.groundtruth.size()) == 1.0);
}

TEST_CASE("synth_generate: objects reflect at the borders") {
    SyntheticConfig cfg;
    cfg.frames = 40;
    cfg.width = 20;
    cfg.height = 10;
    cfg.noise_sigma = 0.0;
    cfg.objects = {{4, 4, 0.0, 0.0, 3.0, 2.0, 200}};
    const auto v = synth_generate(cfg);
    bool touched_right = false;
    for(const auto& gt : v.groundtruth) {
        touched_right = touched_right || gt(0, 19) == 255 || gt(9, 19) == 255 || gt(5, 19) == 255;
        std::size_t fg = 0;
        for(auto p : gt.pixels())
            fg += p == 255;
        REQUIRE(fg == 16u);
    }
    CHECK(touched_right);
}

TEST_CASE("synth_generate: candidate streams are imperfect and pairwise distinct") {
    SyntheticConfig cfg;
    cfg.frames = 60;
    const auto v = synth_generate(cfg);
    REQUIRE(v.candidates.size() == 3);
    std::vector<double> fms;
    for(const auto& c : v.candidates) {
        for(const auto& m : c)
            REQUIRE(is_binary(m));
        fms.push_back(testing::sequence_fm(c, v.groundtruth, 0, c.size()));
        CHECK(fms.back() < 1.0);
        CHECK(fms.back() > 0.3);
    }
    CHECK(v.candidates[0] != v.candidates[1]);
    CHECK(v.candidates[0] != v.candidates[2]);
    CHECK(v.candidates[1] != v.candidates[2]);
}

TEST_CASE("synth_generate: pixel flip rate matches its probability") {
    SyntheticConfig cfg;
    cfg.frames = 245;  // 245 * 64 * 64 > 10^6 pixels
    cfg.corruptions = {{"flip", 0, 0, 0.05, 0.0}};
    const auto v = synth_generate(cfg);
    std::size_t flipped = 0, total = 0;
    for(std::size_t t = 0; t < v.groundtruth.size(); ++t)
        for(std::size_t i = 0; i < v.groundtruth[t].size(); ++i) {
            flipped += v.candidates[0][t][i] != v.groundtruth[t][i];
            ++total;
        }
    REQUIRE(total >= 1000000);
    CHECK(std::abs(static_cast<double>(flipped) / static_cast<double>(total) - 0.05) <= 0.01);
}

TEST_CASE("synth_generate: configuration errors") {
    SyntheticConfig cfg;
    cfg.max_size = 80;
    CHECK_THROWS_AS(synth_generate(cfg), ConfigError);
    cfg = {};
    cfg.objects = {{70, 4, 0, 0, 1, 1, 200}};
    CHECK_THROWS_AS(synth_generate(cfg), ConfigError);
    cfg = {};
    cfg.corruptions = {{"x", 0, 0, 1.5, 0.0}};
    CHECK_THROWS_AS(synth_generate(cfg), ConfigError);
}

TEST_CASE("dilate / erode on a square") {
    Mask m(9, 9);
    for(std::size_t y = 3; y < 6; ++y)
        for(std::size_t x = 3; x < 6; ++x)
            m(y, x) = 255;
    auto count = [](const Mask& k) {
        std::size_t n = 0;
        for(auto v : k.pixels())
            n += v == 255;
        return n;
    };
    CHECK(count(dilate(m, 1)) == 25);
    CHECK(count(dilate(m, 2)) == 49);
    CHECK(count(erode(m, 1)) == 1);
    CHECK(erode(dilate(m, 1), 1) == m);
    CHECK(dilate(m, 0) == m);
}

TEST_CASE("write_synthetic produces a dataset that scans back") {
    TempDir root("synthwrite");
    SyntheticConfig cfg;
    cfg.frames = 12;
    const auto v = synth_generate(cfg);
    write_synthetic(v, cfg, root.path(), "synthetic", "video1");
    const auto idx = scan_cdnet(root.path());
    REQUIRE(idx.videos.size() == 1);
    CHECK(idx.videos[0].frames.size() == 12);
    CHECK(idx.videos[0].roi_first == 1);
    CHECK(idx.videos[0].roi_last == 12);
    CHECK(load_image(idx.videos[0].frames[4].input) == v.frames[4]);
    CHECK(load_image(idx.videos[0].frames[4].groundtruth) == v.groundtruth[4]);
    CHECK(load_image(root / "synthetic/video1/candidates/eroded/bin000005.png") == v.candidates[1][4]);
}
