#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "geocaustic/surface.hpp"

namespace geocaustic {

struct Nearest {
    bool found = false;
    double distance = 0.0;
    std::size_t polyline = 0;
    std::size_t segment = 0;  // index of the segment start (or of the vertex for point sets)
    double s = 0.0;           // position on the segment in [0, 1]
};

/// Nearest-point queries against a set of polylines on a surface. Candidates come from a hash of
/// ambient positions; distances are measured with the chart metric, which is accurate for
/// segments much shorter than the curvature scale.
class ProximityIndex {
public:
    ProximityIndex(const Surface& surface, double cell);

    void add_polyline(std::vector<ChartPoint> points, bool closed = false);
    /// Isolated points, no segments between them.
    void add_points(std::vector<ChartPoint> points);

    /// Nearest point within max_distance (found = false when there is none).
    Nearest nearest(const ChartPoint& q, double max_distance) const;
    /// Nearest point, widening the search until something is found.
    Nearest nearest(const ChartPoint& q) const;

    double segment_distance(const ChartPoint& q, std::size_t polyline, std::size_t segment,
                            double* s = nullptr) const;
    std::size_t polyline_count() const { return lines_.size(); }
    const std::vector<ChartPoint>& polyline(std::size_t i) const { return lines_[i].points; }
    bool empty() const { return count_ == 0; }

private:
    struct Line {
        std::vector<ChartPoint> points;
        bool closed = false;
        bool segments = true;
    };
    using Key = std::uint64_t;
    void insert(std::vector<ChartPoint> points, bool closed, bool segments);
    Key key_of(long i, long j, long k) const;
    /// Bound on ambient distance per unit of metric distance near q.
    double ambient_scale(const ChartPoint& q) const;

    Surface surface_;
    double cell_;
    std::vector<Line> lines_;
    std::unordered_map<Key, std::vector<std::pair<std::uint32_t, std::uint32_t>>> grid_;
    std::size_t count_ = 0;
    double max_edge_ = 0.0;  // longest segment in ambient distance
    long lo_[3] = {0, 0, 0}, hi_[3] = {0, 0, 0};
};

}  // namespace geocaustic
