// Dense binary relations over [0, n) stored as one bitset row per element.
#ifndef RMMLAB_BITREL_HPP_
#define RMMLAB_BITREL_HPP_

#include <bit>
#include <cstdint>
#include <vector>

namespace rmmlab {

class BitRel {
public:
    BitRel() = default;
    explicit BitRel(int n) : n_(n), words_((n + 63) / 64), bits_(static_cast<std::size_t>(n) * words_) {}

    int size() const { return n_; }

    void set(int i, int j) { bits_[idx(i, j)] |= bit(j); }
    void reset(int i, int j) { bits_[idx(i, j)] &= ~bit(j); }
    bool test(int i, int j) const { return (bits_[idx(i, j)] & bit(j)) != 0; }

    bool row_empty(int i) const
    {
        for (int w = 0; w < words_; ++w)
            if (bits_[i * words_ + w])
                return false;
        return true;
    }

    /// row(i) |= row(k)
    void or_row(int i, int k)
    {
        for (int w = 0; w < words_; ++w)
            bits_[i * words_ + w] |= bits_[k * words_ + w];
    }

    void unite(const BitRel& o)
    {
        for (std::size_t w = 0; w < bits_.size(); ++w)
            bits_[w] |= o.bits_[w];
    }

    /// Warshall closure in place.
    void close()
    {
        for (int k = 0; k < n_; ++k)
            for (int i = 0; i < n_; ++i)
                if (test(i, k))
                    or_row(i, k);
    }

    BitRel closure() const
    {
        BitRel r = *this;
        r.close();
        return r;
    }

    bool irreflexive() const
    {
        for (int i = 0; i < n_; ++i)
            if (test(i, i))
                return false;
        return true;
    }

    bool acyclic() const { return closure().irreflexive(); }

    /// this ; o
    BitRel compose(const BitRel& o) const { return fix_compose(*this, o); }

    BitRel inverse() const
    {
        BitRel r(n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if (test(i, j))
                    r.set(j, i);
        return r;
    }

    template <class F>
    void for_each(F&& f) const
    {
        for (int i = 0; i < n_; ++i)
            for (int w = 0; w < words_; ++w) {
                std::uint64_t b = bits_[i * words_ + w];
                while (b) {
                    int j = w * 64 + std::countr_zero(b);
                    b &= b - 1;
                    f(i, j);
                }
            }
    }

    bool operator==(const BitRel&) const = default;

private:
    BitRel fix_compose(const BitRel& a, const BitRel& b) const
    {
        BitRel r(n_);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k)
                if (a.test(i, k))
                    r.or_row_from(i, b, k);
        return r;
    }

    void or_row_from(int i, const BitRel& o, int k)
    {
        for (int w = 0; w < words_; ++w)
            bits_[i * words_ + w] |= o.bits_[k * words_ + w];
    }

    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * words_ + (j >> 6); }
    static std::uint64_t bit(int j) { return std::uint64_t{1} << (j & 63); }

    int n_ = 0;
    int words_ = 0;
    std::vector<std::uint64_t> bits_;
};

} // namespace rmmlab

#endif
