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

#include "fuselab/baselines.hpp"

#include "fuselab/error.hpp"

#include <algorithm>
#include <cctype>

namespace fuselab::baselines {

namespace {

void check_stack(std::span<const Mask> masks) {
    if(masks.empty())
        throw DataError("no masks to fuse");
    for(std::size_t i = 0; i < masks.size(); ++i) {
        if(masks[i].empty())
            throw DataError("mask " + std::to_string(i) + " is empty");
        if(!masks[i].same_dims(masks[0]))
            throw DataError("mask " + std::to_string(i) + " is " + std::to_string(masks[i].height()) + "x" +
                            std::to_string(masks[i].width()) + " but mask 0 is " + std::to_string(masks[0].height()) +
                            "x" + std::to_string(masks[0].width()));
        if(!is_binary(masks[i]))
            throw DataError("mask " + std::to_string(i) + " is not binary");
    }
}

}  // namespace

Mask majority_vote(std::span<const Mask> masks) {
    check_stack(masks);
    const std::size_t n = masks.size();
    const std::size_t need = (n + 2) / 2;  // ceil((n+1)/2)
    Mask out(masks[0].height(), masks[0].width(), kBackground);
    for(std::size_t i = 0; i < out.size(); ++i) {
        std::size_t votes = 0;
        for(const auto& m : masks)
            votes += m[i] == kForeground;
        if(votes >= need)
            out[i] = kForeground;
    }
    return out;
}

MaskSet MaskSet::lettered(std::span<const Mask> masks) {
    if(masks.size() > 26)
        throw DataError("at most 26 masks can be lettered");
    MaskSet set;
    for(std::size_t i = 0; i < masks.size(); ++i)
        set.add(std::string(1, static_cast<char>('A' + i)), masks[i]);
    return set;
}

void MaskSet::add(std::string name, Mask mask) {
    if(find(name))
        throw DataError("duplicate mask name '" + name + "'");
    if(mask.empty())
        throw DataError("mask '" + name + "' is empty");
    if(!m_entries.empty() && !mask.same_dims(m_entries.front().second))
        throw DataError("mask '" + name + "' has different dimensions from '" + m_entries.front().first + "'");
    if(!is_binary(mask))
        throw DataError("mask '" + name + "' is not binary");
    m_entries.emplace_back(std::move(name), std::move(mask));
}

const Mask* MaskSet::find(std::string_view name) const {
    for(const auto& [n, m] : m_entries)
        if(n == name)
            return &m;
    return nullptr;
}

struct FusionExpr::Node {
    enum class Kind { Name, Not, And, Or } kind;
    std::string name;
    std::unique_ptr<Node> lhs;
    std::unique_ptr<Node> rhs;
};

namespace {

using Node = FusionExpr::Node;

struct Token {
    enum class Kind { Name, And, Or, Not, LParen, RParen, End } kind;
    std::string text;
    std::size_t pos;  // 1-based
};

std::string upper(std::string_view s) {
    std::string r(s);
    for(auto& c : r)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return r;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while(i < text.size()) {
        const char c = text[i];
        if(std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t pos = i + 1;
        if(c == '(') {
            out.push_back({Token::Kind::LParen, "(", pos});
            ++i;
        } else if(c == ')') {
            out.push_back({Token::Kind::RParen, ")", pos});
            ++i;
        } else if(std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while(j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
                ++j;
            const std::string word(text.substr(i, j - i));
            const std::string up = upper(word);
            Token::Kind kind = Token::Kind::Name;
            if(up == "AND")
                kind = Token::Kind::And;
            else if(up == "OR")
                kind = Token::Kind::Or;
            else if(up == "NOT")
                kind = Token::Kind::Not;
            out.push_back({kind, word, pos});
            i = j;
        } else {
            throw ParseError(std::string("unknown token '") + c + "'", pos);
        }
    }
    out.push_back({Token::Kind::End, "", text.size() + 1});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : m_tokens(std::move(tokens)) {}

    std::unique_ptr<Node> parse() {
        auto root = parse_or();
        const Token& t = peek();
        if(t.kind == Token::Kind::RParen)
            throw ParseError("unbalanced ')'", t.pos);
        if(t.kind != Token::Kind::End)
            throw ParseError("expected operator before '" + t.text + "'", t.pos);
        return root;
    }

private:
    const Token& peek() const { return m_tokens[m_next]; }
    const Token& take() { return m_tokens[m_next++]; }

    static std::unique_ptr<Node> binary(Node::Kind kind, std::unique_ptr<Node> l, std::unique_ptr<Node> r) {
        auto n = std::make_unique<Node>();
        n->kind = kind;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }

    std::unique_ptr<Node> parse_or() {
        auto lhs = parse_and();
        while(peek().kind == Token::Kind::Or) {
            take();
            lhs = binary(Node::Kind::Or, std::move(lhs), parse_and());
        }
        return lhs;
    }

    std::unique_ptr<Node> parse_and() {
        auto lhs = parse_not();
        while(peek().kind == Token::Kind::And) {
            take();
            lhs = binary(Node::Kind::And, std::move(lhs), parse_not());
        }
        return lhs;
    }

    std::unique_ptr<Node> parse_not() {
        const Token& t = take();
        switch(t.kind) {
            case Token::Kind::Not: {
                auto n = std::make_unique<Node>();
                n->kind = Node::Kind::Not;
                n->lhs = parse_not();
                return n;
            }
            case Token::Kind::Name: {
                auto n = std::make_unique<Node>();
                n->kind = Node::Kind::Name;
                n->name = t.text;
                return n;
            }
            case Token::Kind::LParen: {
                auto inner = parse_or();
                const Token& close = take();
                if(close.kind != Token::Kind::RParen)
                    throw ParseError(close.kind == Token::Kind::End ? "missing ')'" : "expected ')'", close.pos);
                return inner;
            }
            case Token::Kind::End:
                throw ParseError("expected operand", t.pos);
            case Token::Kind::RParen:
                throw ParseError("unbalanced ')'", t.pos);
            default:
                throw ParseError("expected operand before '" + t.text + "'", t.pos);
        }
    }

    std::vector<Token> m_tokens;
    std::size_t m_next = 0;
};

bool eval_node(const Node& n, const std::vector<const Mask*>& bound, std::size_t& slot, std::size_t index) {
    switch(n.kind) {
        case Node::Kind::Name:
            return (*bound[slot++])[index] == kForeground;
        case Node::Kind::Not:
            return !eval_node(*n.lhs, bound, slot, index);
        case Node::Kind::And: {
            const bool a = eval_node(*n.lhs, bound, slot, index);
            const bool b = eval_node(*n.rhs, bound, slot, index);
            return a && b;
        }
        case Node::Kind::Or: {
            const bool a = eval_node(*n.lhs, bound, slot, index);
            const bool b = eval_node(*n.rhs, bound, slot, index);
            return a || b;
        }
    }
    return false;
}

// Leaf masks in left-to-right order, so evaluation needs no name lookups per pixel.
void bind_leaves(const Node& n, const MaskSet& masks, std::vector<const Mask*>& out) {
    if(n.kind == Node::Kind::Name) {
        const Mask* m = masks.find(n.name);
        if(!m)
            throw DataError("fusion expression refers to unbound mask '" + n.name + "'");
        out.push_back(m);
        return;
    }
    bind_leaves(*n.lhs, masks, out);
    if(n.rhs)
        bind_leaves(*n.rhs, masks, out);
}

void render(const Node& n, std::string& out) {
    switch(n.kind) {
        case Node::Kind::Name:
            out += n.name;
            return;
        case Node::Kind::Not:
            out += "(NOT ";
            render(*n.lhs, out);
            out += ')';
            return;
        case Node::Kind::And:
        case Node::Kind::Or:
            out += '(';
            render(*n.lhs, out);
            out += n.kind == Node::Kind::And ? " AND " : " OR ";
            render(*n.rhs, out);
            out += ')';
            return;
    }
}

void collect(const Node& n, std::vector<std::string>& out) {
    if(n.kind == Node::Kind::Name) {
        if(std::find(out.begin(), out.end(), n.name) == out.end())
            out.push_back(n.name);
        return;
    }
    collect(*n.lhs, out);
    if(n.rhs)
        collect(*n.rhs, out);
}

}  // namespace

FusionExpr::FusionExpr(std::unique_ptr<Node> root) : m_root(std::move(root)) {}
FusionExpr::FusionExpr(FusionExpr&&) noexcept = default;
FusionExpr& FusionExpr::operator=(FusionExpr&&) noexcept = default;
FusionExpr::~FusionExpr() = default;

FusionExpr FusionExpr::parse(std::string_view text) {
    return FusionExpr(Parser(tokenize(text)).parse());
}

Mask FusionExpr::evaluate(const MaskSet& masks) const {
    if(masks.size() == 0)
        throw DataError("no masks bound for fusion expression");
    std::vector<const Mask*> bound;
    bind_leaves(*m_root, masks, bound);
    Mask out(masks.height(), masks.width(), kBackground);
    for(std::size_t i = 0; i < out.size(); ++i) {
        std::size_t slot = 0;
        if(eval_node(*m_root, bound, slot, i))
            out[i] = kForeground;
    }
    return out;
}

bool FusionExpr::evaluate_pixel(const MaskSet& masks, std::size_t index) const {
    std::vector<const Mask*> bound;
    bind_leaves(*m_root, masks, bound);
    if(index >= masks.height() * masks.width())
        throw DataError("pixel index out of range");
    std::size_t slot = 0;
    return eval_node(*m_root, bound, slot, index);
}

std::string FusionExpr::to_string() const {
    std::string out;
    render(*m_root, out);
    return out;
}

std::vector<std::string> FusionExpr::names() const {
    std::vector<std::string> out;
    collect(*m_root, out);
    return out;
}

Mask eval_expr(std::string_view expr, const MaskSet& masks) {
    return FusionExpr::parse(expr).evaluate(masks);
}

Mask median_filter3(const Mask& mask) {
    if(mask.empty())
        throw DataError("cannot filter an empty mask");
    if(!is_binary(mask))
        throw DataError("median filter input is not binary");
    const std::ptrdiff_t h = static_cast<std::ptrdiff_t>(mask.height());
    const std::ptrdiff_t w = static_cast<std::ptrdiff_t>(mask.width());
    Mask out(mask.height(), mask.width(), kBackground);
    for(std::ptrdiff_t y = 0; y < h; ++y) {
        for(std::ptrdiff_t x = 0; x < w; ++x) {
            int count = 0;
            for(std::ptrdiff_t dy = -1; dy <= 1; ++dy) {
                const auto yy = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y + dy, 0, h - 1));
                for(std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                    const auto xx = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x + dx, 0, w - 1));
                    count += mask(yy, xx) == kForeground;
                }
            }
            if(count >= 5)
                out(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = kForeground;
        }
    }
    return out;
}

}  // namespace fuselab::baselines
