#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "ball.hpp"

namespace maxvar {

/// Scale index n of a diameter: diam in [1/2, 1) * 2^n.
inline int scale_of(double diameter)
{
    int e = 0;
    std::frexp(diameter, &e);
    return e;
}

/// Ordered finite family of balls with access by dyadic scale of the diameter.
class BallFamily {
public:
    BallFamily() = default;
    explicit BallFamily(std::vector<Ball> balls)
    {
        for (auto& b : balls) add(b);
    }

    void add(const Ball& b)
    {
        buckets_[scale_of(b.diameter())].push_back(balls_.size());
        balls_.push_back(b);
    }

    std::size_t size() const { return balls_.size(); }
    bool empty() const { return balls_.empty(); }
    const Ball& operator[](std::size_t i) const { return balls_[i]; }
    const std::vector<Ball>& balls() const { return balls_; }
    auto begin() const { return balls_.begin(); }
    auto end() const { return balls_.end(); }

    /// Indices of the balls in each scale bucket.
    const std::map<int, std::vector<std::size_t>>& buckets() const { return buckets_; }

    BallFamily bucket(int n) const
    {
        BallFamily f;
        if (auto it = buckets_.find(n); it != buckets_.end())
            for (auto i : it->second) f.add(balls_[i]);
        return f;
    }

    /// Balls with scale <= n.
    BallFamily up_to_scale(int n) const
    {
        BallFamily f;
        for (const auto& [k, idx] : buckets_)
            if (k <= n)
                for (auto i : idx) f.add(balls_[i]);
        return f;
    }

    /// Every ball scaled about its center by c.
    BallFamily scaled(double c) const
    {
        BallFamily f;
        for (const auto& b : balls_) f.add(b.scaled(c));
        return f;
    }

    /// True if p lies in some ball.
    bool covers(const Point& p) const
    {
        for (const auto& b : balls_)
            if (b.contains(p)) return true;
        return false;
    }

private:
    std::vector<Ball> balls_;
    std::map<int, std::vector<std::size_t>> buckets_;
};

} // namespace maxvar
