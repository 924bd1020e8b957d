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

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fuselab::baselines {

/// Pixel-wise majority vote: foreground iff at least ceil((N+1)/2) of the N
/// masks are foreground. Throws DataError on an empty list, mismatched dims or
/// non-binary masks.
Mask majority_vote(std::span<const Mask> masks);

/// Named, same-size binary masks that a fusion expression can refer to.
class MaskSet {
public:
    MaskSet() = default;
    /// Names the masks "A", "B", "C", ... in order.
    static MaskSet lettered(std::span<const Mask> masks);

    void add(std::string name, Mask mask);
    const Mask* find(std::string_view name) const;
    std::size_t size() const { return m_entries.size(); }
    std::size_t height() const { return m_entries.empty() ? 0 : m_entries.front().second.height(); }
    std::size_t width() const { return m_entries.empty() ? 0 : m_entries.front().second.width(); }

private:
    std::vector<std::pair<std::string, Mask>> m_entries;
};

/// Parsed boolean combination of named masks. Grammar, lowest precedence first:
///   or  := and ("OR" and)*
///   and := not ("AND" not)*
///   not := "NOT" not | name | "(" or ")"
/// Keywords are case-insensitive; names are [A-Za-z_][A-Za-z0-9_]*.
class FusionExpr {
public:
    struct Node;

    /// Throws ParseError carrying the 1-based column of the offending token
    /// (one past the end for a truncated expression).
    static FusionExpr parse(std::string_view text);

    /// Throws DataError for an unbound name or an empty mask set.
    Mask evaluate(const MaskSet& masks) const;
    bool evaluate_pixel(const MaskSet& masks, std::size_t index) const;

    /// Fully parenthesised canonical form, e.g. "(A AND (NOT B))".
    std::string to_string() const;
    /// Distinct names in first-appearance order.
    std::vector<std::string> names() const;

    FusionExpr(FusionExpr&&) noexcept;
    FusionExpr& operator=(FusionExpr&&) noexcept;
    ~FusionExpr();

private:
    explicit FusionExpr(std::unique_ptr<Node> root);
    std::unique_ptr<Node> m_root;
};

/// Convenience: parse and evaluate in one call.
Mask eval_expr(std::string_view expr, const MaskSet& masks);

/// 3x3 binary median (foreground iff >= 5 of 9) with edge replication.
Mask median_filter3(const Mask& mask);

}  // namespace fuselab::baselines
