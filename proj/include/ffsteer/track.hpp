#pragma once

#include <string>
#include <vector>

namespace ffsteer {

struct TrackPoint {
    double s = 0.0;          // arc length [m]
    double x = 0.0;          // [m]
    double y = 0.0;          // [m]
    double heading = 0.0;    // unwrapped [rad]
    double curvature = 0.0;  // [1/m], positive turning left
};

enum class SegmentKind { Straight, Arc, Clothoid };

/// One piece of a synthetic centerline. For clothoids curvature ramps linearly
/// from `curvature` to `curvature_end` over `length`.
struct TrackSegment {
    SegmentKind kind = SegmentKind::Straight;
    double length = 0.0;
    double curvature = 0.0;
    double curvature_end = 0.0;

    static TrackSegment straight(double length) { return {SegmentKind::Straight, length, 0.0, 0.0}; }
    static TrackSegment arc(double length, double k) { return {SegmentKind::Arc, length, k, k}; }
    static TrackSegment clothoid(double length, double k0, double k1) {
        return {SegmentKind::Clothoid, length, k0, k1};
    }
};

struct Projection {
    double s = 0.0;              // arc length of the nearest centerline point
    double lateral_error = 0.0;  // positive left of the path tangent [m]
    double heading_error = 0.0;  // vehicle yaw minus path heading, wrapped to (-pi, pi]
};

/// Pose on the centerline at a given arc length.
struct CenterlinePose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
    double curvature = 0.0;
};

/// Arc-length parameterized centerline. Immutable after construction.
///
/// A closed track stores its closing point explicitly: the last point sits at
/// s == total_length() on top of the first one, with heading offset by the
/// accumulated turning (+-2 pi).
class Track {
public:
    Track() = default;
    Track(std::vector<TrackPoint> points, bool closed);

    const std::vector<TrackPoint>& points() const { return points_; }
    bool closed() const { return closed_; }
    double total_length() const { return points_.empty() ? 0.0 : points_.back().s; }
    double spacing() const;

    /// Wraps s into [0, total_length) for closed tracks, clamps otherwise.
    double wrap(double s) const;

    /// Interpolates along the sample's local arc.
    CenterlinePose at(double s) const;
    double curvature_at(double s) const;

    /// Nearest centerline point, searched within +-window around s_hint.
    /// Falls back to a global search; throws OffTrack beyond max_distance.
    Projection project(double x, double y, double yaw, double s_hint,
                       double window = 20.0, double max_distance = 50.0) const;

    void write_csv(const std::string& path) const;
    static Track read_csv(const std::string& path, double spacing = 1.0);

    /// Builds a track from raw positions: resampled uniformly, heading and
    /// curvature by finite differences unless given.
    static Track from_positions(const std::vector<double>& xs, const std::vector<double>& ys,
                                bool closed, double spacing = 1.0,
                                const std::vector<double>& curvature = {});

private:
    std::size_t segment_index(double s) const;

    std::vector<TrackPoint> points_;
    bool closed_ = false;
};

struct TrackBuildOptions {
    double spacing = 1.0;
    double substep = 0.1;
    bool closed = true;
    double closure_tolerance = 0.5;
};

/// Integrates the segment list (RK4 on x, y, heading) and resamples uniformly.
/// For closed tracks the closure residual is distributed linearly in s;
/// throws NonClosure when it is 0.5 m or more.
Track build_synthetic_track(const std::vector<TrackSegment>& segments,
                            const TrackBuildOptions& opts = {});

/// Default benchmark layout: two hairpins (k = 0.05), two fast sweepers
/// (k = 0.01) and straights. The second half is the first half rotated by pi,
/// which closes the loop by construction.
std::vector<TrackSegment> default_track_segments();
Track default_track();

/// Signed integral of curvature over the track.
double total_turning(const Track& track);

double wrap_angle(double a);

}  // namespace ffsteer
