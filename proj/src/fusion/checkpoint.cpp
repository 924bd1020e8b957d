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

#include "fuselab/fusion/checkpoint.hpp"

#include "fuselab/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fuselab::fusion {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for(int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : m_bytes(bytes) {}

    std::uint32_t u32(const char* what) {
        if(m_pos + 4 > m_bytes.size())
            throw FormatError(std::string("checkpoint truncated while reading ") + what);
        std::uint32_t v = 0;
        for(int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(m_bytes[m_pos + i]) << (8 * i);
        m_pos += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32("parameter values")); }
    bool at_end() const { return m_pos == m_bytes.size(); }
    std::size_t pos() const { return m_pos; }

private:
    const std::vector<std::uint8_t>& m_bytes;
    std::size_t m_pos = 0;
};

std::vector<std::uint32_t> logical_dims(const nn::Parameter<float>& p) {
    const nn::Shape& s = p.value.shape();
    if(p.rank == 1)
        return {static_cast<std::uint32_t>(s.n)};
    return {static_cast<std::uint32_t>(s.n), static_cast<std::uint32_t>(s.c), static_cast<std::uint32_t>(s.h),
            static_cast<std::uint32_t>(s.w)};
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const nn::ParamStore<float>& params, const NetConfig& config) {
    config.validate();
    std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
    put_u32(out, kCheckpointVersion);
    put_u32(out, config.input_channels);
    put_u32(out, config.input_size);
    put_u32(out, static_cast<std::uint32_t>(kStages));
    for(auto c : config.stage_channels)
        put_u32(out, c);
    for(auto c : config.convs_per_stage)
        put_u32(out, c);
    for(const auto& p : params) {
        const auto dims = logical_dims(p);
        put_u32(out, static_cast<std::uint32_t>(dims.size()));
        for(auto d : dims)
            put_u32(out, d);
        for(float v : p.value.data())
            put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if(bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
        throw FormatError("not a fusion checkpoint (bad magic)");
    std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
    Reader r(body);
    const std::uint32_t version = r.u32("version");
    if(version != kCheckpointVersion)
        throw VersionError(version, kCheckpointVersion);
    NetConfig config;
    config.input_channels = r.u32("config");
    config.input_size = r.u32("config");
    const std::uint32_t stages = r.u32("config");
    if(stages != kStages)
        throw FormatError("checkpoint declares " + std::to_string(stages) + " stages, expected 5");
    for(auto& c : config.stage_channels)
        c = r.u32("config");
    for(auto& c : config.convs_per_stage)
        c = r.u32("config");
    try {
        config.validate();
    } catch(const ConfigError& e) {
        throw FormatError(std::string("checkpoint holds an invalid network config: ") + e.what());
    }
    nn::ParamStore<float> params = build_network<float>(config, 0);
    for(auto& p : params) {
        const auto expected = logical_dims(p);
        const std::uint32_t rank = r.u32("tensor rank");
        if(rank != expected.size())
            throw FormatError("parameter '" + p.name + "' has rank " + std::to_string(rank) + ", config implies " +
                              std::to_string(expected.size()));
        for(std::size_t d = 0; d < rank; ++d)
            if(r.u32("tensor dims") != expected[d])
                throw FormatError("parameter '" + p.name + "' dims disagree with the stored config");
        for(auto& v : p.value.data())
            v = r.f32();
    }
    if(!r.at_end())
        throw FormatError("checkpoint has " + std::to_string(body.size() - r.pos()) + " trailing bytes");
    return Checkpoint{config, std::move(params)};
}

void save_checkpoint(const nn::ParamStore<float>& params, const NetConfig& config, const std::filesystem::path& path) {
    const auto bytes = serialize_checkpoint(params, config);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if(!os)
        throw DataError("cannot open '" + path.string() + "' for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if(!os)
        throw DataError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if(!is)
        throw DataError("cannot open checkpoint '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace fuselab::fusion
