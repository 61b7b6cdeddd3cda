#include "geocaustic/proximity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geocaustic {

ProximityIndex::ProximityIndex(const Surface& surface, double cell)
    : surface_(surface), cell_(cell) {
    if (!(cell > 0.0)) throw Error(ErrorKind::InvalidArgument, "proximity cell must be positive");
}

ProximityIndex::Key ProximityIndex::key_of(long i, long j, long k) const {
    const auto h = [](long x) { return static_cast<std::uint64_t>(x + (1L << 20)) & 0x1fffffULL; };
    return (h(i) << 42) | (h(j) << 21) | h(k);
}

double ProximityIndex::ambient_scale(const ChartPoint& q) const {
    const Metric g = surface_.metric_at(q);
    double a11 = 1.0, a12 = 0.0, a22 = 1.0;
    if (auto jet = surface_.chart(q.chart).ambient(q.u, q.v)) {
        a11 = dot(jet->d[0], jet->d[0]);
        a12 = dot(jet->d[0], jet->d[1]);
        a22 = dot(jet->d[1], jet->d[1]);
    }
    // Largest root of det(A - lambda g) = 0.
    const double a = g.det();
    const double b = g.g11 * a22 + g.g22 * a11 - 2.0 * g.g12 * a12;
    const double c = a11 * a22 - a12 * a12;
    const double disc = std::max(0.0, b * b - 4.0 * a * c);
    return std::sqrt((b + std::sqrt(disc)) / (2.0 * a));
}

void ProximityIndex::add_points(std::vector<ChartPoint> points) {
    insert(std::move(points), false, false);
}

void ProximityIndex::add_polyline(std::vector<ChartPoint> points, bool closed) {
    insert(std::move(points), closed, true);
}

void ProximityIndex::insert(std::vector<ChartPoint> points, bool closed, bool segments) {
    const auto id = static_cast<std::uint32_t>(lines_.size());
    Vec3 prev{};
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3 x = surface_.ambient(points[i]);
        long c[3];
        for (int d = 0; d < 3; ++d) c[d] = static_cast<long>(std::floor(x[d] / cell_));
        if (count_ == 0) {
            for (int d = 0; d < 3; ++d) lo_[d] = hi_[d] = c[d];
        }
        for (int d = 0; d < 3; ++d) {
            lo_[d] = std::min(lo_[d], c[d]);
            hi_[d] = std::max(hi_[d], c[d]);
        }
        grid_[key_of(c[0], c[1], c[2])].emplace_back(id, static_cast<std::uint32_t>(i));
        if (segments && i > 0) max_edge_ = std::max(max_edge_, norm(x - prev));
        prev = x;
        ++count_;
    }
    if (segments && closed && points.size() > 1)
        max_edge_ = std::max(max_edge_, norm(surface_.ambient(points.front()) - prev));
    lines_.push_back({std::move(points), closed, segments});
}

double ProximityIndex::segment_distance(const ChartPoint& q, std::size_t polyline,
                                        std::size_t segment, double* s_out) const {
    const Line& line = lines_[polyline];
    const ChartPoint& a = line.points[segment];
    const std::size_t next = segment + 1 == line.points.size() ? 0 : segment + 1;
    const Vec2 dq = surface_.delta(a, q);
    if (!line.segments || (next == 0 && !line.closed) || line.points.size() < 2) {
        if (s_out) *s_out = 0.0;
        return surface_.local_distance(a, q);
    }
    const Vec2 ab = surface_.delta(a, line.points[next]);
    const ChartPoint mid{a.chart, a.u + 0.5 * ab[0], a.v + 0.5 * ab[1]};
    const Metric g = surface_.metric_at(mid);
    const double len2 = g.inner(ab, ab);
    double s = len2 > 0.0 ? g.inner(dq, ab) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    if (s_out) *s_out = s;
    const Vec2 r = dq - s * ab;
    const ChartPoint foot{a.chart, a.u + s * ab[0], a.v + s * ab[1]};
    return surface_.metric_at(foot).norm(r);
}

Nearest ProximityIndex::nearest(const ChartPoint& q, double max_distance) const {
    Nearest best;
    if (count_ == 0) return best;
    const Vec3 x = surface_.ambient(q);
    const double radius = 1.5 * ambient_scale(q) * max_distance + max_edge_;
    long c0[3], c1[3];
    for (int d = 0; d < 3; ++d) {
        c0[d] = std::max(lo_[d], static_cast<long>(std::floor((x[d] - radius) / cell_)));
        c1[d] = std::min(hi_[d], static_cast<long>(std::floor((x[d] + radius) / cell_)));
        if (c0[d] > c1[d]) return best;
    }
    best.distance = std::numeric_limits<double>::infinity();
    const auto consider = [&](std::size_t line, std::size_t seg) {
        double s = 0.0;
        const double dist = segment_distance(q, line, seg, &s);
        if (dist < best.distance ||
            (dist == best.distance && (line < best.polyline || (line == best.polyline && seg < best.segment)))) {
            best.distance = dist;
            best.polyline = line;
            best.segment = seg;
            best.s = s;
            best.found = true;
        }
    };
    const auto visit = [&](const std::vector<std::pair<std::uint32_t, std::uint32_t>>& entries) {
        for (const auto& [line, idx] : entries) {
            const Line& l = lines_[line];
            consider(line, idx);
            if (l.segments && idx > 0) consider(line, idx - 1);
            if (l.segments && idx == 0 && l.closed) consider(line, l.points.size() - 1);
        }
    };
    double box_cells = 1.0;
    for (int d = 0; d < 3; ++d) box_cells *= static_cast<double>(c1[d] - c0[d] + 1);
    if (box_cells > static_cast<double>(count_)) {
        // Sparse index: scanning every entry is cheaper than probing the box.
        for (const auto& [key, entries] : grid_) visit(entries);
    } else {
        for (long i = c0[0]; i <= c1[0]; ++i)
            for (long j = c0[1]; j <= c1[1]; ++j)
                for (long k = c0[2]; k <= c1[2]; ++k) {
                    const auto it = grid_.find(key_of(i, j, k));
                    if (it != grid_.end()) visit(it->second);
                }
    }
    if (!best.found || best.distance > max_distance) {
        best.found = false;
        return best;
    }
    return best;
}

Nearest ProximityIndex::nearest(const ChartPoint& q) const {
    if (count_ == 0) return {};
    double r = cell_;
    for (int it = 0; it < 64; ++it, r *= 2.0) {
        const Nearest n = nearest(q, r);
        if (n.found) return n;
    }
    return {};
}

}  // namespace geocaustic
