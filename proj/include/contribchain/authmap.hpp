#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "contribchain/sha256.hpp"

namespace contribchain {

namespace mpt {

using Nibbles = std::vector<std::uint8_t>;

inline Nibbles to_nibbles(std::span<const unsigned char> key) {
    Nibbles out;
    out.reserve(key.size() * 2);
    for (auto b : key) {
        out.push_back(static_cast<std::uint8_t>(b >> 4));
        out.push_back(static_cast<std::uint8_t>(b & 0xf));
    }
    return out;
}

inline Bytes pack_nibbles(std::span<const std::uint8_t> nibbles) {
    Bytes out((nibbles.size() + 1) / 2, 0);
    for (std::size_t i = 0; i < nibbles.size(); ++i) {
        if (i % 2 == 0)
            out[i / 2] = static_cast<unsigned char>(nibbles[i] << 4);
        else
            out[i / 2] |= nibbles[i];
    }
    return out;
}

inline std::size_t common_prefix(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    const std::size_t limit = std::min(a.size(), b.size());
    std::size_t i = 0;
    while (i < limit && a[i] == b[i])
        ++i;
    return i;
}

// Node digests commit the full subtree; see docs/FORMATS.md.
inline Digest leaf_digest(std::span<const std::uint8_t> suffix, std::span<const unsigned char> value) {
    ByteWriter w;
    w.u8(0x00);
    w.u16(static_cast<std::uint16_t>(suffix.size()));
    const auto packed = pack_nibbles(suffix);
    w.raw(std::span<const unsigned char>(packed.data(), packed.size()));
    w.blob(value);
    return w.hash();
}

inline Digest extension_digest(std::span<const std::uint8_t> path, const Digest& child) {
    ByteWriter w;
    w.u8(0x01);
    w.u16(static_cast<std::uint16_t>(path.size()));
    const auto packed = pack_nibbles(path);
    w.raw(std::span<const unsigned char>(packed.data(), packed.size()));
    w.digest(child);
    return w.hash();
}

inline Digest branch_digest(const std::array<Digest, 16>& children, bool has_value,
                            std::span<const unsigned char> value) {
    ByteWriter w;
    w.u8(0x02);
    for (const auto& d : children)
        w.digest(d);
    w.u8(has_value ? 1 : 0);
    if (has_value)
        w.blob(value);
    return w.hash();
}

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable trie node. Inserts copy the root-to-leaf path, so snapshots
/// share structure and stay valid forever.
struct Node {
    enum class Kind : std::uint8_t { leaf, extension, branch };

    Kind kind;
    Nibbles path;                       // leaf suffix or extension path
    Bytes value;                        // leaf value or branch value
    bool has_value = false;             // branch only
    std::array<NodePtr, 16> children{}; // branch only
    NodePtr child;                      // extension only
    Digest digest;

    static NodePtr make_leaf(Nibbles suffix, Bytes value) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::leaf;
        n->digest = leaf_digest(suffix, std::span<const unsigned char>(value.data(), value.size()));
        n->path = std::move(suffix);
        n->value = std::move(value);
        return n;
    }

    static NodePtr make_extension(Nibbles path, NodePtr child) {
        if (path.empty())
            return child; // the degenerate extension is the child itself
        auto n = std::make_shared<Node>();
        n->kind = Kind::extension;
        n->digest = extension_digest(path, child->digest);
        n->path = std::move(path);
        n->child = std::move(child);
        return n;
    }

    static NodePtr make_branch(std::array<NodePtr, 16> children, bool has_value, Bytes value) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::branch;
        std::array<Digest, 16> digests{};
        for (std::size_t i = 0; i < 16; ++i)
            if (children[i])
                digests[i] = children[i]->digest;
        n->digest =
            branch_digest(digests, has_value, std::span<const unsigned char>(value.data(), value.size()));
        n->children = std::move(children);
        n->has_value = has_value;
        n->value = std::move(value);
        return n;
    }

    std::array<Digest, 16> child_digests() const {
        std::array<Digest, 16> out{};
        for (std::size_t i = 0; i < 16; ++i)
            if (children[i])
                out[i] = children[i]->digest;
        return out;
    }
};

inline NodePtr insert(const NodePtr& node, std::span<const std::uint8_t> nibs, const Bytes& value) {
    if (!node)
        return Node::make_leaf(Nibbles(nibs.begin(), nibs.end()), value);

    switch (node->kind) {
    case Node::Kind::leaf: {
        const auto cp = common_prefix(node->path, nibs);
        if (cp == node->path.size() && cp == nibs.size())
            return Node::make_leaf(node->path, value); // overwrite
        std::array<NodePtr, 16> children{};
        bool has_value = false;
        Bytes branch_value;
        // old leaf side
        if (cp == node->path.size()) {
            has_value = true;
            branch_value = node->value;
        } else {
            children[node->path[cp]] =
                Node::make_leaf(Nibbles(node->path.begin() + static_cast<std::ptrdiff_t>(cp) + 1,
                                        node->path.end()),
                                node->value);
        }
        // new key side
        if (cp == nibs.size()) {
            has_value = true;
            branch_value = value;
        } else {
            children[nibs[cp]] =
                Node::make_leaf(Nibbles(nibs.begin() + static_cast<std::ptrdiff_t>(cp) + 1, nibs.end()),
                                value);
        }
        auto branch = Node::make_branch(std::move(children), has_value, std::move(branch_value));
        return Node::make_extension(Nibbles(nibs.begin(), nibs.begin() + static_cast<std::ptrdiff_t>(cp)),
                                    std::move(branch));
    }
    case Node::Kind::extension: {
        const auto cp = common_prefix(node->path, nibs);
        if (cp == node->path.size()) {
            auto updated = insert(node->child, nibs.subspan(cp), value);
            return Node::make_extension(node->path, std::move(updated));
        }
        std::array<NodePtr, 16> children{};
        bool has_value = false;
        Bytes branch_value;
        // existing subtree side: the nibble after the split indexes it
        {
            Nibbles rest(node->path.begin() + static_cast<std::ptrdiff_t>(cp) + 1, node->path.end());
            children[node->path[cp]] = Node::make_extension(std::move(rest), node->child);
        }
        // new key side
        if (cp == nibs.size()) {
            has_value = true;
            branch_value = value;
        } else {
            children[nibs[cp]] =
                Node::make_leaf(Nibbles(nibs.begin() + static_cast<std::ptrdiff_t>(cp) + 1, nibs.end()),
                                value);
        }
        auto branch = Node::make_branch(std::move(children), has_value, std::move(branch_value));
        return Node::make_extension(Nibbles(nibs.begin(), nibs.begin() + static_cast<std::ptrdiff_t>(cp)),
                                    std::move(branch));
    }
    case Node::Kind::branch: {
        if (nibs.empty()) {
            auto children = node->children;
            return Node::make_branch(std::move(children), true, value);
        }
        auto children = node->children;
        children[nibs[0]] = insert(node->children[nibs[0]], nibs.subspan(1), value);
        return Node::make_branch(std::move(children), node->has_value, node->value);
    }
    }
    throw std::logic_error("unreachable trie node kind");
}

inline const Node* find(const Node* node, std::span<const std::uint8_t> nibs) {
    while (node) {
        switch (node->kind) {
        case Node::Kind::leaf:
            return (nibs.size() == node->path.size() &&
                    std::equal(nibs.begin(), nibs.end(), node->path.begin()))
                       ? node
                       : nullptr;
        case Node::Kind::extension: {
            if (nibs.size() < node->path.size() ||
                !std::equal(node->path.begin(), node->path.end(), nibs.begin()))
                return nullptr;
            nibs = nibs.subspan(node->path.size());
            node = node->child.get();
            break;
        }
        case Node::Kind::branch: {
            if (nibs.empty())
                return node->has_value ? node : nullptr;
            const Node* next = node->children[nibs[0]].get();
            nibs = nibs.subspan(1);
            node = next;
            break;
        }
        }
    }
    return nullptr;
}

} // namespace mpt

struct ProofStep {
    enum class Kind : std::uint8_t { leaf, extension, branch };
    static constexpr std::uint8_t value_slot = 16; // branch index meaning "ends here"

    Kind kind;
    mpt::Nibbles path;                  // leaf suffix or extension path
    std::uint8_t index = 0;             // branch: which slot the search took
    std::array<Digest, 16> children{};  // branch: all slot digests
    bool branch_has_value = false;
    Bytes branch_value;
};

/// Inclusion proof for one (key, value) entry; `steps` run from the root
/// down to the terminal node.
struct MerkleProof {
    Bytes key;
    Bytes value;
    std::vector<ProofStep> steps;
};

/// Authenticated key-value map: a hex-nibble radix trie whose root digest
/// commits the entire entry set, independent of insertion order. Values
/// are byte strings; the map is persistent, so every snapshot keeps
/// working after later inserts.
class AuthenticatedMap {
public:
    AuthenticatedMap() = default;

    static constexpr std::size_t max_key_bytes = 64;

    AuthenticatedMap insert(std::span<const unsigned char> key,
                            std::span<const unsigned char> value) const {
        check_key(key);
        const auto nibs = mpt::to_nibbles(key);
        AuthenticatedMap out;
        out.root_ = mpt::insert(root_, nibs, Bytes(value.begin(), value.end()));
        out.size_ = size_ + (mpt::find(root_.get(), nibs) ? 0 : 1);
        return out;
    }

    AuthenticatedMap insert(std::string_view key, std::string_view value) const {
        return insert(as_span(key), as_span(value));
    }

    std::optional<Bytes> get(std::span<const unsigned char> key) const {
        check_key(key);
        const auto nibs = mpt::to_nibbles(key);
        const mpt::Node* node = mpt::find(root_.get(), nibs);
        if (!node)
            return std::nullopt;
        return node->value;
    }

    std::optional<Bytes> get(std::string_view key) const { return get(as_span(key)); }

    /// Zero digest for the empty map.
    Digest root() const { return root_ ? root_->digest : Digest{}; }

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    MerkleProof prove(std::span<const unsigned char> key) const {
        check_key(key);
        MerkleProof proof;
        proof.key.assign(key.begin(), key.end());
        const auto nibs = mpt::to_nibbles(key);
        std::span<const std::uint8_t> rest(nibs);
        const mpt::Node* node = root_.get();
        while (node) {
            switch (node->kind) {
            case mpt::Node::Kind::leaf: {
                if (rest.size() != node->path.size() ||
                    !std::equal(rest.begin(), rest.end(), node->path.begin()))
                    throw std::invalid_argument("prove: key not present");
                ProofStep step;
                step.kind = ProofStep::Kind::leaf;
                step.path = node->path;
                proof.steps.push_back(std::move(step));
                proof.value = node->value;
                return proof;
            }
            case mpt::Node::Kind::extension: {
                if (rest.size() < node->path.size() ||
                    !std::equal(node->path.begin(), node->path.end(), rest.begin()))
                    throw std::invalid_argument("prove: key not present");
                ProofStep step;
                step.kind = ProofStep::Kind::extension;
                step.path = node->path;
                proof.steps.push_back(std::move(step));
                rest = rest.subspan(node->path.size());
                node = node->child.get();
                break;
            }
            case mpt::Node::Kind::branch: {
                ProofStep step;
                step.kind = ProofStep::Kind::branch;
                step.children = node->child_digests();
                step.branch_has_value = node->has_value;
                step.branch_value = node->value;
                if (rest.empty()) {
                    if (!node->has_value)
                        throw std::invalid_argument("prove: key not present");
                    step.index = ProofStep::value_slot;
                    proof.steps.push_back(std::move(step));
                    proof.value = node->value;
                    return proof;
                }
                step.index = rest[0];
                const mpt::Node* next = node->children[rest[0]].get();
                proof.steps.push_back(std::move(step));
                rest = rest.subspan(1);
                node = next;
                break;
            }
            }
        }
        throw std::invalid_argument("prove: key not present");
    }

    /// True iff `proof` demonstrates that (key, value) belongs to the map
    /// committed by `root`.
    static bool verify(const Digest& root, const MerkleProof& proof) {
        if (proof.steps.empty())
            return false;

        // the terminal step binds the value; earlier steps must descend
        mpt::Nibbles walked;
        for (std::size_t i = 0; i < proof.steps.size(); ++i) {
            const auto& step = proof.steps[i];
            const bool terminal = i + 1 == proof.steps.size();
            switch (step.kind) {
            case ProofStep::Kind::leaf:
                if (!terminal)
                    return false;
                walked.insert(walked.end(), step.path.begin(), step.path.end());
                break;
            case ProofStep::Kind::extension:
                if (terminal || step.path.empty())
                    return false;
                walked.insert(walked.end(), step.path.begin(), step.path.end());
                break;
            case ProofStep::Kind::branch:
                if (step.index == ProofStep::value_slot) {
                    if (!terminal || !step.branch_has_value || step.branch_value != proof.value)
                        return false;
                } else if (terminal || step.index >= 16) {
                    return false;
                } else {
                    walked.push_back(step.index);
                }
                break;
            }
        }
        if (walked != mpt::to_nibbles(std::span<const unsigned char>(proof.key.data(), proof.key.size())))
            return false;

        // fold digests bottom-up
        Digest current;
        {
            const auto& last = proof.steps.back();
            if (last.kind == ProofStep::Kind::leaf)
                current = mpt::leaf_digest(
                    last.path, std::span<const unsigned char>(proof.value.data(), proof.value.size()));
            else
                current = mpt::branch_digest(
                    last.children, true,
                    std::span<const unsigned char>(proof.value.data(), proof.value.size()));
        }
        for (std::size_t i = proof.steps.size() - 1; i-- > 0;) {
            const auto& step = proof.steps[i];
            if (step.kind == ProofStep::Kind::extension) {
                current = mpt::extension_digest(step.path, current);
            } else if (step.kind == ProofStep::Kind::branch) {
                auto children = step.children;
                children[step.index] = current;
                current = mpt::branch_digest(
                    children, step.branch_has_value,
                    std::span<const unsigned char>(step.branch_value.data(), step.branch_value.size()));
            } else {
                return false; // leaf above the terminal step
            }
        }
        return current == root;
    }

private:
    static void check_key(std::span<const unsigned char> key) {
        if (key.empty() || key.size() > max_key_bytes)
            throw std::invalid_argument("key must have 1..64 bytes");
    }

    static std::span<const unsigned char> as_span(std::string_view s) {
        return {reinterpret_cast<const unsigned char*>(s.data()), s.size()};
    }

    mpt::NodePtr root_;
    std::size_t size_ = 0;
};

} // namespace contribchain
