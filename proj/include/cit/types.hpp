#pragma once

// Core scene types: units, agent-centric grid geometry, trajectories and
// maneuver classes shared by every other module.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cit {

using Vec2 = Eigen::Vector2d;
using Mat = Eigen::MatrixXd;
using RowVec = Eigen::RowVectorXd;

inline constexpr double kFeetToMeters = 0.3048;

enum class LengthUnit { feet, meters };

// All internal geometry is in meters; feet exist only at the ingestion
// boundary and in GridSpec defaults.
inline double convert_units(double value, LengthUnit from) {
    if (!std::isfinite(value))
        throw std::invalid_argument("convert_units: non-finite input");
    return from == LengthUnit::feet ? value * kFeetToMeters : value;
}

// Equally spaced path of one agent. x is longitudinal (along the road),
// y lateral (across lanes), both meters.
struct Trajectory {
    Mat points;        // [T x 2]
    double rate = 5.0; // Hz
    long t0 = 0;       // absolute frame index of points.row(0)

    long size() const { return points.rows(); }
    void validate() const {
        if (points.rows() < 1 || points.cols() != 2)
            throw std::invalid_argument("Trajectory: empty or malformed point matrix");
        if (!points.allFinite())
            throw std::invalid_argument("Trajectory: non-finite coordinate");
        if (!(rate > 0))
            throw std::invalid_argument("Trajectory: rate must be positive");
    }
};

// Future motion plan of the ego agent. 5 Hz during training, 1 Hz when only
// a coarse intention is available.
struct EgoPlan {
    Mat points;        // [K x 2], meters, absolute
    double rate = 5.0; // Hz, 1 or 5

    long size() const { return points.rows(); }
    void validate() const {
        if (points.rows() < 2 || points.cols() != 2)
            throw std::invalid_argument("EgoPlan: needs at least 2 points");
        if (!points.allFinite())
            throw std::invalid_argument("EgoPlan: non-finite coordinate");
        if (rate != 1.0 && rate != 5.0)
            throw std::invalid_argument("EgoPlan: rate must be 1 or 5 Hz");
    }
};

// Agent-centric interaction area. Extents are kept in feet to mirror the
// dataset convention; cell sizes convert to meters exactly once here.
struct GridSpec {
    double length_ft = 200.0; // longitudinal extent
    double width_ft = 35.0;   // lateral extent
    int rows = 25;            // longitudinal cells
    int cols = 5;             // lateral cells

    double cell_length_m() const { return length_ft * kFeetToMeters / rows; }
    double cell_width_m() const { return width_ft * kFeetToMeters / cols; }
    double half_length_m() const { return 0.5 * length_ft * kFeetToMeters; }
    double half_width_m() const { return 0.5 * width_ft * kFeetToMeters; }
    int cells() const { return rows * cols; }

    void validate() const {
        if (rows < 1 || cols < 1 || !(length_ft > 0) || !(width_ft > 0))
            throw std::invalid_argument("GridSpec: non-positive extent or cell count");
    }
    bool operator==(const GridSpec&) const = default;
};

struct GridCell {
    int row = 0;
    int col = 0;
    bool operator==(const GridCell&) const = default;
    // row-major flat index; row r of the flattened grid matrix
    int flat(const GridSpec& spec) const { return row * spec.cols + col; }
};

// Cell containing `pos` (meters, relative to the grid-center agent), or
// nullopt outside the extent. Cells are half-open intervals, boundary points
// belong to the higher-index cell. The grid is centered so that the middle
// of the center cell sits on the center agent.
inline std::optional<GridCell> grid_cell_of(const Vec2& pos, const GridSpec& spec) {
    spec.validate();
    if (!pos.allFinite())
        throw std::invalid_argument("grid_cell_of: non-finite position");
    const double r = std::floor(pos.x() / spec.cell_length_m() + spec.rows * 0.5);
    const double c = std::floor(pos.y() / spec.cell_width_m() + spec.cols * 0.5);
    if (r < 0 || r >= spec.rows || c < 0 || c >= spec.cols)
        return std::nullopt;
    return GridCell{static_cast<int>(r), static_cast<int>(c)};
}

enum class LatManeuver : int { keep = 0, left = 1, right = 2 };
enum class LonManeuver : int { normal = 0, brake = 1 };

inline constexpr int kLatCount = 3;
inline constexpr int kLonCount = 2;
inline constexpr int kManeuverCount = kLatCount * kLonCount;

// One of the six discrete behavior classes (3 lateral x 2 longitudinal).
struct ManeuverLabel {
    LatManeuver lateral = LatManeuver::keep;
    LonManeuver longitudinal = LonManeuver::normal;

    bool operator==(const ManeuverLabel&) const = default;
    int joint_index() const {
        return static_cast<int>(lateral) * kLonCount + static_cast<int>(longitudinal);
    }
    static ManeuverLabel from_joint(int k) {
        if (k < 0 || k >= kManeuverCount)
            throw std::invalid_argument("ManeuverLabel: joint index out of range");
        return {static_cast<LatManeuver>(k / kLonCount), static_cast<LonManeuver>(k % kLonCount)};
    }
};

inline const char* to_string(LatManeuver m) {
    switch (m) {
        case LatManeuver::keep: return "keep";
        case LatManeuver::left: return "left";
        case LatManeuver::right: return "right";
    }
    throw std::invalid_argument("bad LatManeuver");
}
inline const char* to_string(LonManeuver m) {
    switch (m) {
        case LonManeuver::normal: return "normal";
        case LonManeuver::brake: return "brake";
    }
    throw std::invalid_argument("bad LonManeuver");
}
inline LatManeuver lat_from_string(const std::string& s) {
    if (s == "keep") return LatManeuver::keep;
    if (s == "left") return LatManeuver::left;
    if (s == "right") return LatManeuver::right;
    throw std::invalid_argument("unknown lateral maneuver: " + s);
}
inline LonManeuver lon_from_string(const std::string& s) {
    if (s == "normal") return LonManeuver::normal;
    if (s == "brake") return LonManeuver::brake;
    throw std::invalid_argument("unknown longitudinal maneuver: " + s);
}

// Travel-aligned agent frame: local = flip * (global - anchor). flip is -1
// when the agent drives toward negative x, so "ahead" and "left" keep a
// consistent sign in every grid.
struct AgentFrame {
    Vec2 anchor = Vec2::Zero();
    double flip = 1.0;

    Vec2 to_local(const Vec2& global) const { return flip * (global - anchor); }
    Vec2 to_global(const Vec2& local) const { return anchor + flip * local; }
    Mat rows_to_local(const Mat& global_rows) const {
        return flip * (global_rows.rowwise() - anchor.transpose());
    }
};

} // namespace cit
