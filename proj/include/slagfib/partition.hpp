#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace slagfib {

/// Split of the coordinate indices {0,...,n} into I'' (containing 0) and I'.
/// l+1 = |I''|.  Every block formula in the library is driven by this split.
class PartitionedIndex {
public:
    PartitionedIndex(int n, std::vector<int> i_second) : n_(n), isec_(std::move(i_second)) {
        if (n_ < 1) throw std::invalid_argument("PartitionedIndex: n must be >= 1");
        std::sort(isec_.begin(), isec_.end());
        if (isec_.empty() || isec_.front() != 0)
            throw std::invalid_argument("PartitionedIndex: I'' must contain 0");
        for (std::size_t i = 0; i + 1 < isec_.size(); ++i)
            if (isec_[i] == isec_[i + 1])
                throw std::invalid_argument("PartitionedIndex: duplicate index in I''");
        if (isec_.back() > n_)
            throw std::invalid_argument("PartitionedIndex: index out of range");
        std::vector<char> used(n_ + 1, 0);
        for (int k : isec_) used[k] = 1;
        for (int k = 0; k <= n_; ++k)
            if (!used[k]) ipr_.push_back(k);
    }

    int n() const { return n_; }
    int l() const { return static_cast<int>(isec_.size()) - 1; }
    const std::vector<int>& i_second() const { return isec_; }   // I'', contains 0
    const std::vector<int>& i_prime() const { return ipr_; }     // I'
    bool in_second(int k) const { return std::binary_search(isec_.begin(), isec_.end(), k); }
    bool in_prime(int k) const { return !in_second(k); }

    bool operator==(const PartitionedIndex& o) const { return n_ == o.n_ && isec_ == o.isec_; }

private:
    int n_;
    std::vector<int> isec_;
    std::vector<int> ipr_;
};

}  // namespace slagfib
