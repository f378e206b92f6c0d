#pragma once

#include <utility>
#include <vector>

#include "lhs/common.hpp"
#include "lhs/scene.hpp"

namespace lhs {

// Spinning-sensor beam grid: N_az azimuth steps over [-pi, pi), N_el beams
// uniformly over [elev_min, elev_max]. Sensor sits at the origin.
struct LaserGrid {
    int n_azimuth = 2650;
    int n_elevation = 64;
    double elev_min = deg2rad(-25.0);
    double elev_max = deg2rad(15.0);

    void validate() const {
        if (n_azimuth < 8 || n_elevation < 2) throw InputError("laser grid: too few beams");
        if (elev_max <= elev_min) throw InputError("laser grid: bad elevation span");
    }

    double azimuth_step() const { return 2.0 * kPi / n_azimuth; }
    double elevation_step() const { return (elev_max - elev_min) / (n_elevation - 1); }
    double azimuth_of(int i) const { return -kPi + i * azimuth_step(); }
    double elevation_of(int j) const { return elev_min + j * elevation_step(); }
};

// Contiguous index ranges of the grid covering the scene's angular extent.
// Azimuth may wrap past the -pi/+pi seam (wraps flag); columns then run
// az_start, az_start+1, ... modulo n_azimuth.
struct EffectiveWindow {
    int az_start = 0;
    int az_count = 0;
    bool az_wraps = false;
    int el_start = 0;
    int el_count = 0;

    int ray_count() const { return az_count * el_count; }
    int azimuth_index(int col) const { return az_start + col; }  // caller wraps
};

// Minimal grid-aligned cover of the vertex angular extents: a cell is kept
// when its bin (center +- step/2) intersects the closed [min,max] interval.
// Azimuth is recentered on the scene's mean bearing before taking extents so
// a scene straddling +-pi yields a narrow window, not a ~360 deg one.
inline EffectiveWindow effective_window(const LaserGrid& grid, const SceneMesh& scene,
                                        int margin_cells = 0) {
    grid.validate();
    if (scene.vertices.rows() < 1) throw InputError("effective_window: empty scene");

    double sx = 0.0, sy = 0.0;
    for (int v = 0; v < scene.vertices.rows(); ++v) {
        const double range = scene.vertices.row(v).norm();
        if (range < 1e-9) throw DegenerateError("effective_window: vertex at sensor origin");
        sx += scene.vertices(v, 0) / range;
        sy += scene.vertices(v, 1) / range;
    }
    if (std::hypot(sx, sy) < 1e-12)
        throw DegenerateError("effective_window: scene surrounds the sensor");
    const double center_az = std::atan2(sy, sx);

    double az_lo = 1e9, az_hi = -1e9, el_lo = 1e9, el_hi = -1e9;
    for (int v = 0; v < scene.vertices.rows(); ++v) {
        const Vec3 p = scene.vertices.row(v);
        double az = std::atan2(p.y(), p.x()) - center_az;
        if (az > kPi) az -= 2.0 * kPi;
        if (az < -kPi) az += 2.0 * kPi;
        const double el = std::atan2(p.z(), std::hypot(p.x(), p.y()));
        az_lo = std::min(az_lo, az);
        az_hi = std::max(az_hi, az);
        el_lo = std::min(el_lo, el);
        el_hi = std::max(el_hi, el);
    }

    EffectiveWindow w;

    // Azimuth: work in recentered coordinates, then shift indices back.
    const double az_step = grid.azimuth_step();
    const int first = static_cast<int>(std::ceil((center_az + az_lo + kPi) / az_step - 0.5)) -
                      margin_cells;
    const int last = static_cast<int>(std::floor((center_az + az_hi + kPi) / az_step + 0.5)) +
                     margin_cells;
    int count = last - first + 1;
    if (count >= grid.n_azimuth) {
        w.az_start = 0;
        w.az_count = grid.n_azimuth;
        w.az_wraps = false;
    } else {
        w.az_start = ((first % grid.n_azimuth) + grid.n_azimuth) % grid.n_azimuth;
        w.az_count = count;
        w.az_wraps = w.az_start + w.az_count > grid.n_azimuth;
    }

    // Elevation: clamp to the physical beam set.
    const double el_step = grid.elevation_step();
    int jfirst = static_cast<int>(std::ceil((el_lo - grid.elev_min) / el_step - 0.5)) -
                 margin_cells;
    int jlast = static_cast<int>(std::floor((el_hi - grid.elev_min) / el_step + 0.5)) +
                margin_cells;
    jfirst = std::max(jfirst, 0);
    jlast = std::min(jlast, grid.n_elevation - 1);
    if (jlast < jfirst) {
        // Scene entirely outside the vertical FOV: empty window.
        w.el_start = 0;
        w.el_count = 0;
    } else {
        w.el_start = jfirst;
        w.el_count = jlast - jfirst + 1;
    }
    return w;
}

}  // namespace lhs
