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
#include <filesystem>
#include <string>
#include <vector>

namespace fuselab::dataset {

namespace fs = std::filesystem;

/// Reads an 8-bit PNG, PGM or JPEG as one channel (colour is converted with
/// the luma weights). Throws DataError for a missing, unsupported or corrupt file.
Frame load_image(const fs::path& path);

/// Writes an 8-bit PNG or PGM, chosen by extension. Parent directories must exist.
void save_image(const Image& img, const fs::path& path);

/// As save_image, but rejects non-binary masks.
void save_mask(const Mask& mask, const fs::path& path);

/// A file named <prefix><digits>.<ext>, e.g. in000123.jpg.
struct NumberedFile {
    std::size_t number;
    fs::path path;
};

/// Files in `dir` whose stem is `prefix` followed only by digits and whose
/// extension is one of `extensions` (lowercase, with dot), sorted by number.
/// Throws DataError on duplicate numbers or a missing directory.
std::vector<NumberedFile> list_numbered(const fs::path& dir, const std::string& prefix,
                                        const std::vector<std::string>& extensions);

struct FrameEntry {
    std::size_t number;
    fs::path input;
    fs::path groundtruth;
};

struct VideoEntry {
    std::string category;
    std::string name;
    fs::path dir;
    std::vector<FrameEntry> frames;  // ascending frame number
    std::size_t roi_first = 0;
    std::size_t roi_last = 0;

    /// True when `number` lies inside the temporal ROI.
    bool evaluable(std::size_t number) const { return number >= roi_first && number <= roi_last; }
};

struct CdnetIndex {
    std::vector<VideoEntry> videos;  // sorted by (category, name)
    std::vector<std::string> categories() const;
};

inline const std::vector<std::string> kInputExtensions{".jpg", ".jpeg", ".png", ".pgm"};

/// Walks root/<category>/<video>/{input,groundtruth,temporalROI.txt}. A video
/// is any directory holding an `input` subdirectory. Throws DataError naming
/// the video for a missing groundtruth directory, unreadable or out-of-range
/// ROI file, or frame/gt numbers that do not line up; and for an empty dataset.
CdnetIndex scan_cdnet(const fs::path& root);

/// Parses "first last" from a temporalROI.txt. Throws DataError.
std::array<std::size_t, 2> read_roi(const fs::path& path);

/// Indices of frames whose foreground share among non-ignored pixels is at
/// least `min_fg_fraction`. Frames without any non-ignored pixel are skipped.
std::vector<std::size_t> select_training_frames(const std::vector<Mask>& gts, double min_fg_fraction = 0.005);

/// How one simulated detector degrades the ground truth.
struct Corruption {
    std::string name;
    int dilate = 0;        // square structuring element radius
    int erode = 0;
    double flip = 0.0;     // per-pixel flip probability
    double dropout = 0.0;  // probability that a whole frame comes out empty
};

struct SyntheticObject {
    int width;
    int height;
    double x;   // top-left corner at frame 0
    double y;
    double vx;  // pixels per frame
    double vy;
    std::uint8_t intensity;
};

struct SyntheticConfig {
    int width = 64;
    int height = 64;
    int frames = 200;
    /// Random objects are drawn when `objects` is empty.
    int object_count = 2;
    int min_size = 8;
    int max_size = 16;
    double max_speed = 2.0;
    std::vector<SyntheticObject> objects;
    double noise_sigma = 4.0;
    std::vector<Corruption> corruptions{{"dilated", 2, 0, 0.0, 0.0},
                                        {"eroded", 0, 2, 0.0, 0.0},
                                        {"noisy", 0, 0, 0.05, 0.05}};
    std::uint64_t seed = 42;

    /// Throws ConfigError (including for objects larger than the frame).
    void validate() const;
};

struct SyntheticVideo {
    std::vector<Frame> frames;
    std::vector<Mask> groundtruth;
    std::vector<std::vector<Mask>> candidates;  // one stream per corruption
    std::vector<SyntheticObject> objects;       // as resolved from the config
};

/// Rectangles moving with reflection at the borders over a static textured
/// background plus Gaussian noise. Everything is a pure function of
/// (seed, frame index).
SyntheticVideo synth_generate(const SyntheticConfig& cfg);

/// Square dilation / erosion with the window clipped at the borders.
Mask dilate(const Mask& m, int radius);
Mask erode(const Mask& m, int radius);

/// Writes root/<category>/<video>/{input/in%06d.png, groundtruth/gt%06d.png,
/// temporalROI.txt, candidates/<name>/bin%06d.png}, frames numbered from 1.
void write_synthetic(const SyntheticVideo& video, const SyntheticConfig& cfg, const fs::path& root,
                     const std::string& category, const std::string& name);

/// "bin%06d.png"-style file name.
std::string numbered_name(const std::string& prefix, std::size_t number, const std::string& ext);

}  // namespace fuselab::dataset
