#include "ffsteer/track.hpp"

#include "ffsteer/csv.hpp"
#include "ffsteer/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace ffsteer {

double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a <= 0.0) a += two_pi;
    return a - std::numbers::pi;
}

Track::Track(std::vector<TrackPoint> points, bool closed)
    : points_(std::move(points)), closed_(closed) {
    if (points_.size() < 2) throw InvalidInput("track needs at least two points");
    if (points_.front().s != 0.0) throw InvalidInput("track must start at s = 0");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i].s > points_[i - 1].s)) throw InvalidInput("track s must be strictly increasing");
    }
}

double Track::spacing() const {
    return total_length() / static_cast<double>(points_.size() - 1);
}

double Track::wrap(double s) const {
    const double len = total_length();
    if (!closed_) return std::clamp(s, 0.0, len);
    s = std::fmod(s, len);
    if (s < 0.0) s += len;
    if (s >= len) s = 0.0;
    return s;
}

std::size_t Track::segment_index(double s) const {
    const auto it = std::upper_bound(points_.begin(), points_.end(), s,
                                     [](double v, const TrackPoint& p) { return v < p.s; });
    const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - points_.begin()) - 1));
    return std::min(idx, points_.size() - 2);
}

namespace {

// Constant-curvature arc through a segment start, evaluated at local arc
// length sigma. Returns offsets in the world frame.
std::array<double, 2> arc_offset(double heading, double kappa, double sigma) {
    double along = 0.0;
    double across = 0.0;
    const double phi = kappa * sigma;
    if (std::abs(phi) < 1e-6) {
        along = sigma * (1.0 - phi * phi / 6.0);
        across = sigma * (phi / 2.0 - phi * phi * phi / 24.0);
    } else {
        along = std::sin(phi) / kappa;
        across = (1.0 - std::cos(phi)) / kappa;
    }
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    return {along * c - across * s, along * s + across * c};
}

struct ArcFoot {
    double sigma;
    double lateral;
    double distance;
};

// Nearest point on a constant-curvature segment of length len. Local frame:
// u along the start tangent, w to the left.
ArcFoot project_on_arc(double u, double w, double kappa, double len) {
    const double sgn = kappa < 0.0 ? -1.0 : 1.0;
    const double k = std::abs(kappa);
    const double wm = sgn * w;
    // Stable form of R - |q - centre| that degrades gracefully to w as k -> 0.
    const double k_rho = std::hypot(k * u, 1.0 - k * wm);
    double lateral = sgn * (2.0 * wm - k * (wm * wm + u * u)) / (1.0 + k_rho);
    double sigma = k < 1e-12 ? u : std::atan2(k * u, 1.0 - k * wm) / k;
    if (sigma >= 0.0 && sigma <= len) return {sigma, lateral, std::abs(lateral)};

    sigma = std::clamp(sigma, 0.0, len);
    const double phi = kappa * sigma;
    double pu = 0.0;
    double pw = 0.0;
    if (std::abs(phi) < 1e-6) {
        pu = sigma;
        pw = sigma * phi / 2.0;
    } else {
        pu = std::sin(phi) / kappa;
        pw = (1.0 - std::cos(phi)) / kappa;
    }
    const double du = u - pu;
    const double dw = w - pw;
    // Sign from the tangent at the clamped foot.
    const double cross = std::cos(phi) * dw - std::sin(phi) * du;
    const double dist = std::hypot(du, dw);
    lateral = cross >= 0.0 ? dist : -dist;
    return {sigma, lateral, dist};
}

}  // namespace

CenterlinePose Track::at(double s) const {
    s = wrap(s);
    const std::size_t i = segment_index(s);
    const auto& a = points_[i];
    const auto& b = points_[i + 1];
    const double len = b.s - a.s;
    const double sigma = s - a.s;
    const double kappa = (b.heading - a.heading) / len;
    const auto off = arc_offset(a.heading, kappa, sigma);
    const double t = sigma / len;
    return {a.x + off[0], a.y + off[1], a.heading + kappa * sigma,
            a.curvature + t * (b.curvature - a.curvature)};
}

double Track::curvature_at(double s) const {
    s = wrap(s);
    const std::size_t i = segment_index(s);
    const auto& a = points_[i];
    const auto& b = points_[i + 1];
    const double t = (s - a.s) / (b.s - a.s);
    return a.curvature + t * (b.curvature - a.curvature);
}

Projection Track::project(double x, double y, double yaw, double s_hint, double window,
                          double max_distance) const {
    const std::size_t n_seg = points_.size() - 1;
    // Closed tracks duplicate the first point at the end; skip it.
    const std::size_t n_unique = closed_ ? n_seg : points_.size();

    auto dist2 = [&](std::size_t i) {
        const double dx = points_[i].x - x;
        const double dy = points_[i].y - y;
        return dx * dx + dy * dy;
    };

    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    const double ds = spacing();
    const auto steps = static_cast<std::ptrdiff_t>(std::ceil(window / ds));
    const auto centre = static_cast<std::ptrdiff_t>(segment_index(wrap(s_hint)));
    for (std::ptrdiff_t off = -steps; off <= steps + 1; ++off) {
        std::ptrdiff_t j = centre + off;
        if (closed_) {
            j %= static_cast<std::ptrdiff_t>(n_unique);
            if (j < 0) j += static_cast<std::ptrdiff_t>(n_unique);
        } else if (j < 0 || j >= static_cast<std::ptrdiff_t>(n_unique)) {
            continue;
        }
        const double d2 = dist2(static_cast<std::size_t>(j));
        if (d2 < best_d2) {
            best_d2 = d2;
            best = static_cast<std::size_t>(j);
        }
    }
    if (best_d2 > max_distance * max_distance) {
        for (std::size_t j = 0; j < n_unique; ++j) {
            const double d2 = dist2(j);
            if (d2 < best_d2) {
                best_d2 = d2;
                best = j;
            }
        }
        if (best_d2 > max_distance * max_distance) {
            throw OffTrack("no centerline point within " + std::to_string(max_distance) + " m");
        }
    }

    // Candidate segments: the one ending at `best` and the one starting there.
    std::array<std::ptrdiff_t, 2> cands{static_cast<std::ptrdiff_t>(best) - 1,
                                        static_cast<std::ptrdiff_t>(best)};
    if (closed_) {
        if (cands[0] < 0) cands[0] += static_cast<std::ptrdiff_t>(n_seg);
        if (cands[1] >= static_cast<std::ptrdiff_t>(n_seg)) cands[1] -= static_cast<std::ptrdiff_t>(n_seg);
    }

    Projection out;
    double out_dist = std::numeric_limits<double>::infinity();
    for (const auto k : cands) {
        if (k < 0 || k >= static_cast<std::ptrdiff_t>(n_seg)) continue;
        const auto& a = points_[static_cast<std::size_t>(k)];
        const auto& b = points_[static_cast<std::size_t>(k) + 1];
        const double len = b.s - a.s;
        const double kappa = (b.heading - a.heading) / len;
        const double c = std::cos(a.heading);
        const double sn = std::sin(a.heading);
        const double dx = x - a.x;
        const double dy = y - a.y;
        const double u = dx * c + dy * sn;
        const double w = -dx * sn + dy * c;
        const auto foot = project_on_arc(u, w, kappa, len);
        if (foot.distance < out_dist) {
            out_dist = foot.distance;
            out.s = wrap(a.s + foot.sigma);
            out.lateral_error = foot.lateral;
            out.heading_error = wrap_angle(yaw - (a.heading + kappa * foot.sigma));
        }
    }
    return out;
}

void Track::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    csv::write_header(out, {"s", "x", "y", "heading", "curvature"});
    for (const auto& p : points_) csv::write_row(out, {p.s, p.x, p.y, p.heading, p.curvature});
}

Track Track::from_positions(const std::vector<double>& xs_in, const std::vector<double>& ys_in,
                            bool closed, double spacing, const std::vector<double>& curvature_in) {
    if (xs_in.size() != ys_in.size() || xs_in.size() < 3) {
        throw InvalidInput("need at least three matching x/y samples");
    }
    std::vector<double> xs = xs_in;
    std::vector<double> ys = ys_in;
    std::vector<double> ks = curvature_in;
    if (closed && std::hypot(xs.back() - xs.front(), ys.back() - ys.front()) > 1e-9) {
        xs.push_back(xs.front());
        ys.push_back(ys.front());
        if (!ks.empty()) ks.push_back(ks.front());
    }
    std::vector<double> chord(xs.size(), 0.0);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        chord[i] = chord[i - 1] + std::hypot(xs[i] - xs[i - 1], ys[i] - ys[i - 1]);
        if (!(chord[i] > chord[i - 1])) throw InvalidInput("duplicate consecutive track positions");
    }
    const double total = chord.back();
    const auto n = static_cast<std::size_t>(std::max(2.0, std::round(total / spacing)));
    const double step = total / static_cast<double>(n);

    std::vector<TrackPoint> pts(n + 1);
    std::size_t seg = 0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double s = j == n ? total : step * static_cast<double>(j);
        while (seg + 2 < chord.size() && chord[seg + 1] < s) ++seg;
        const double t = (s - chord[seg]) / (chord[seg + 1] - chord[seg]);
        pts[j].s = s;
        pts[j].x = xs[seg] + t * (xs[seg + 1] - xs[seg]);
        pts[j].y = ys[seg] + t * (ys[seg + 1] - ys[seg]);
        if (!ks.empty()) pts[j].curvature = ks[seg] + t * (ks[seg + 1] - ks[seg]);
    }
    if (closed) {
        pts[n].x = pts[0].x;
        pts[n].y = pts[0].y;
    }

    // Heading from central differences, unwrapped.
    auto raw_heading = [&](std::size_t j) {
        std::size_t lo = j == 0 ? (closed ? n - 1 : 0) : j - 1;
        std::size_t hi = j == n ? (closed ? 1 : n) : j + 1;
        if (closed && j == n) lo = n - 1;
        return std::atan2(pts[hi].y - pts[lo].y, pts[hi].x - pts[lo].x);
    };
    pts[0].heading = raw_heading(0);
    for (std::size_t j = 1; j <= n; ++j) {
        const double h = raw_heading(j);
        pts[j].heading = pts[j - 1].heading + wrap_angle(h - pts[j - 1].heading);
    }
    if (ks.empty()) {
        for (std::size_t j = 0; j <= n; ++j) {
            double dh = 0.0;
            if (j == 0) {
                dh = closed ? (pts[1].heading - (pts[n - 1].heading - (pts[n].heading - pts[0].heading))) / 2.0
                            : pts[1].heading - pts[0].heading;
                if (!closed) { pts[j].curvature = dh / step; continue; }
            } else if (j == n) {
                if (closed) { pts[j].curvature = pts[0].curvature; continue; }
                dh = pts[n].heading - pts[n - 1].heading;
                pts[j].curvature = dh / step;
                continue;
            } else {
                dh = (pts[j + 1].heading - pts[j - 1].heading) / 2.0;
            }
            pts[j].curvature = dh / step;
        }
    }
    return Track(std::move(pts), closed);
}

Track Track::read_csv(const std::string& path, double spacing) {
    const auto table = csv::read(path);
    const auto ix = table.require("x");
    const auto iy = table.require("y");
    const int is = table.column("s");
    const int ih = table.column("heading");
    const int ik = table.column("curvature");
    if (table.rows.size() < 3) throw InvalidInput(path + ": too few track points");

    std::vector<double> xs, ys, ks;
    for (const auto& r : table.rows) {
        xs.push_back(r[ix]);
        ys.push_back(r[iy]);
        if (ik >= 0) ks.push_back(r[static_cast<std::size_t>(ik)]);
    }
    const bool closed = std::hypot(xs.back() - xs.front(), ys.back() - ys.front()) < 1e-6;

    if (is >= 0 && ih >= 0 && ik >= 0) {
        std::vector<TrackPoint> pts;
        pts.reserve(table.rows.size());
        for (const auto& r : table.rows) {
            pts.push_back({r[static_cast<std::size_t>(is)], r[ix], r[iy],
                           r[static_cast<std::size_t>(ih)], r[static_cast<std::size_t>(ik)]});
        }
        return Track(std::move(pts), closed);
    }
    if (closed) {
        xs.pop_back();
        ys.pop_back();
        if (!ks.empty()) ks.pop_back();
    }
    return from_positions(xs, ys, closed, spacing, ks);
}

namespace {

struct Pose3 {
    double x, y, h;
};

// RK4 on (x, y, heading) with curvature linear in the local arc length.
Pose3 integrate(Pose3 p, double k0, double dk, double sigma0, double len, double substep) {
    const auto n = static_cast<int>(std::max(1.0, std::ceil(len / substep - 1e-9)));
    const double h = len / n;
    auto f = [&](double sigma, const Pose3& q) {
        return Pose3{std::cos(q.h), std::sin(q.h), k0 + dk * sigma};
    };
    double sigma = sigma0;
    for (int i = 0; i < n; ++i) {
        const Pose3 a = f(sigma, p);
        const Pose3 b = f(sigma + h / 2, {p.x + h / 2 * a.x, p.y + h / 2 * a.y, p.h + h / 2 * a.h});
        const Pose3 c = f(sigma + h / 2, {p.x + h / 2 * b.x, p.y + h / 2 * b.y, p.h + h / 2 * b.h});
        const Pose3 d = f(sigma + h, {p.x + h * c.x, p.y + h * c.y, p.h + h * c.h});
        p.x += h / 6 * (a.x + 2 * b.x + 2 * c.x + d.x);
        p.y += h / 6 * (a.y + 2 * b.y + 2 * c.y + d.y);
        p.h += h / 6 * (a.h + 2 * b.h + 2 * c.h + d.h);
        sigma += h;
    }
    return p;
}

}  // namespace

Track build_synthetic_track(const std::vector<TrackSegment>& segments, const TrackBuildOptions& opts) {
    if (segments.empty()) throw InvalidInput("no track segments");
    if (!(opts.spacing > 0.0) || !(opts.substep > 0.0)) throw InvalidInput("spacing must be positive");

    std::vector<double> seg_start;
    double total = 0.0;
    for (const auto& seg : segments) {
        if (!(seg.length > 0.0)) throw InvalidInput("segment lengths must be positive");
        seg_start.push_back(total);
        total += seg.length;
    }
    const auto n = static_cast<std::size_t>(std::max(2.0, std::round(total / opts.spacing)));
    const double step = total / static_cast<double>(n);

    auto seg_curv = [&](std::size_t k, double sigma) {
        const auto& seg = segments[k];
        switch (seg.kind) {
            case SegmentKind::Straight: return 0.0;
            case SegmentKind::Arc: return seg.curvature;
            case SegmentKind::Clothoid:
                return seg.curvature + (seg.curvature_end - seg.curvature) * sigma / seg.length;
        }
        return 0.0;
    };
    auto seg_slope = [&](std::size_t k) {
        const auto& seg = segments[k];
        return seg.kind == SegmentKind::Clothoid ? (seg.curvature_end - seg.curvature) / seg.length : 0.0;
    };

    std::vector<TrackPoint> pts(n + 1);
    Pose3 pose{0.0, 0.0, 0.0};
    std::size_t k = 0;
    double s_cur = 0.0;
    pts[0] = {0.0, 0.0, 0.0, 0.0, seg_curv(0, 0.0)};
    for (std::size_t j = 1; j <= n; ++j) {
        const double target = j == n ? total : step * static_cast<double>(j);
        // Integrate up to target without crossing a segment boundary mid-step.
        while (s_cur < target) {
            const double seg_end = seg_start[k] + segments[k].length;
            const double upto = std::min(target, seg_end);
            if (upto > s_cur) {
                const double sigma0 = s_cur - seg_start[k];
                pose = integrate(pose, seg_curv(k, 0.0), seg_slope(k), sigma0, upto - s_cur, opts.substep);
                s_cur = upto;
            }
            if (s_cur >= seg_end && k + 1 < segments.size()) ++k;
            else if (s_cur >= seg_end) break;
        }
        double kappa = seg_curv(k, target - seg_start[k]);
        pts[j] = {target, pose.x, pose.y, pose.h, kappa};
    }

    bool closed = false;
    if (opts.closed) {
        const double rx = pts[n].x - pts[0].x;
        const double ry = pts[n].y - pts[0].y;
        const double residual = std::hypot(rx, ry);
        if (residual >= opts.closure_tolerance) {
            throw NonClosure("closure residual " + std::to_string(residual) + " m exceeds tolerance");
        }
        const double turns = std::round(pts[n].heading / (2.0 * std::numbers::pi));
        const double dh = pts[n].heading - turns * 2.0 * std::numbers::pi;
        for (auto& p : pts) {
            const double frac = p.s / total;
            p.x -= rx * frac;
            p.y -= ry * frac;
            p.heading -= dh * frac;
            p.curvature -= dh / total;
        }
        pts[n].x = pts[0].x;
        pts[n].y = pts[0].y;
        pts[n].curvature = pts[0].curvature;
        closed = true;
    }
    return Track(std::move(pts), closed);
}

std::vector<TrackSegment> default_track_segments() {
    constexpr double pi = std::numbers::pi;
    // Per half: right-hand sweeper turning -0.8 rad, left-hand hairpin turning
    // pi + 0.8 rad, so each half turns by pi.
    constexpr double sweep_k = -0.01;
    constexpr double sweep_clothoid = 30.0;
    constexpr double sweep_arc = 50.0;
    constexpr double sweep_turn = 0.8;
    constexpr double hair_k = 0.05;
    constexpr double hair_clothoid = 15.0;
    constexpr double hair_arc_turn = pi + sweep_turn - hair_k * hair_clothoid;
    const std::vector<TrackSegment> half{
        TrackSegment::straight(300.0),
        TrackSegment::clothoid(sweep_clothoid, 0.0, sweep_k),
        TrackSegment::arc(sweep_arc, sweep_k),
        TrackSegment::clothoid(sweep_clothoid, sweep_k, 0.0),
        TrackSegment::straight(200.0),
        TrackSegment::clothoid(hair_clothoid, 0.0, hair_k),
        TrackSegment::arc(hair_arc_turn / hair_k, hair_k),
        TrackSegment::clothoid(hair_clothoid, hair_k, 0.0),
        TrackSegment::straight(100.0),
    };
    std::vector<TrackSegment> all = half;
    all.insert(all.end(), half.begin(), half.end());
    return all;
}

Track default_track() { return build_synthetic_track(default_track_segments()); }

double total_turning(const Track& track) {
    const auto& p = track.points();
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        sum += 0.5 * (p[i].curvature + p[i + 1].curvature) * (p[i + 1].s - p[i].s);
    }
    return sum;
}

}  // namespace ffsteer
