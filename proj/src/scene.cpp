#include "graspsynth/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/core.h>

#include "graspsynth/error.hpp"
#include "graspsynth/io.hpp"

namespace graspsynth {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr int kMaxYawAttempts = 64;

bool valid_id(std::string_view id) {
    if (id.empty() || id.front() == '.') return false;
    return std::all_of(id.begin(), id.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
    });
}

struct Rotation {
    double c;
    double s;
    explicit Rotation(double yaw_deg) : c(std::cos(yaw_deg * kDegToRad)), s(std::sin(yaw_deg * kDegToRad)) {}
};

struct XY {
    double x;
    double y;
};

std::array<XY, 4> extent_corners(const ObjectExtent& e) {
    return {XY{e.min_x, e.min_y}, XY{e.max_x, e.min_y}, XY{e.max_x, e.max_y}, XY{e.min_x, e.max_y}};
}

}  // namespace

double ObjectExtent::longest_side() const { return std::max({size_x(), size_y(), height}); }

ObjectExtent ObjectModel::extent() const {
    std::size_t rmin = heights.rows(), rmax = 0, cmin = heights.cols(), cmax = 0;
    double hmax = 0.0;
    for (std::size_t r = 0; r < heights.rows(); ++r) {
        for (std::size_t c = 0; c < heights.cols(); ++c) {
            const double h = heights(r, c);
            if (h <= 0.0) continue;
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
            cmin = std::min(cmin, c);
            cmax = std::max(cmax, c);
            hmax = std::max(hmax, h);
        }
    }
    if (hmax <= 0.0) return {};
    const double half_cols = static_cast<double>(heights.cols()) / 2.0;
    const double half_rows = static_cast<double>(heights.rows()) / 2.0;
    ObjectExtent e;
    e.min_x = (static_cast<double>(cmin) - half_cols) * resolution;
    e.max_x = (static_cast<double>(cmax) + 1.0 - half_cols) * resolution;
    e.min_y = (half_rows - static_cast<double>(rmax) - 1.0) * resolution;
    e.max_y = (half_rows - static_cast<double>(rmin)) * resolution;
    e.height = hmax;
    return e;
}

void ObjectModel::validate() const {
    if (!valid_id(id)) throw ValidationError(fmt::format("invalid object id '{}'", id));
    if (!(resolution > 0.0) || !std::isfinite(resolution)) {
        throw ValidationError(fmt::format("object {}: resolution must be positive", id));
    }
    if (heights.empty()) throw ValidationError(fmt::format("object {}: empty grid", id));
    bool any = false;
    for (double h : heights.data()) {
        if (!std::isfinite(h) || h < 0.0) {
            throw ValidationError(fmt::format("object {}: heights must be finite and non-negative", id));
        }
        any = any || h > 0.0;
    }
    if (!any) throw ValidationError(fmt::format("object {}: empty object (no cell above the table)", id));
    if (!(mass > 0.0)) throw ValidationError(fmt::format("object {}: mass must be positive", id));
}

double mass_for_longest_side(double longest_side_m) { return kMassPerMeter * longest_side_m; }

ObjectModel make_object(std::string id, Grid<double> heights, double resolution) {
    ObjectModel m{std::move(id), std::move(heights), resolution, 0.0};
    m.mass = 1.0;  // placeholder so validate() checks geometry first
    m.validate();
    m.mass = mass_for_longest_side(m.longest_side());
    return m;
}

ObjectModel parse_heightmap(const std::string& meta_text, const std::string& grid_text,
                            const std::string& source) {
    const auto meta = KeyValues::parse(meta_text, source + " (meta)");
    const std::string id = meta.str("id");
    const double resolution = meta.number("resolution");
    const auto rows = meta.integer("rows");
    const auto cols = meta.integer("cols");
    if (rows <= 0 || cols <= 0) throw ParseError(source, 0, "rows and cols must be positive");
    if (!(resolution > 0.0)) throw ParseError(source, 0, "resolution must be positive");

    const std::string grid_src = source + " (grid)";
    Grid<double> heights(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    std::size_t r = 0;
    std::size_t lineno = 0;
    for (auto raw : split(grid_text, '\n')) {
        ++lineno;
        const auto line = trim(raw);
        if (line.empty()) continue;
        if (r >= heights.rows()) throw ParseError(grid_src, lineno, fmt::format("more than {} rows", rows));
        std::size_t c = 0;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
            if (i >= line.size()) break;
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
            if (c >= heights.cols()) {
                throw ParseError(grid_src, lineno, fmt::format("row has more than {} values", cols));
            }
            const double h = parse_double(line.substr(i, j - i), grid_src, lineno, "height");
            if (h < 0.0) throw ParseError(grid_src, lineno, fmt::format("negative height {}", h));
            heights(r, c++) = h;
            i = j;
        }
        if (c != heights.cols()) {
            throw ParseError(grid_src, lineno, fmt::format("row has {} values, expected {}", c, cols));
        }
        ++r;
    }
    if (r != heights.rows()) throw ParseError(grid_src, lineno, fmt::format("found {} rows, expected {}", r, rows));
    return make_object(id, std::move(heights), resolution);
}

ObjectModel ingest_heightmap(const std::filesystem::path& meta_path) {
    const std::string meta_text = read_text_file(meta_path);
    auto grid_path = meta_path;
    grid_path.replace_extension(".hgt");
    return parse_heightmap(meta_text, read_text_file(grid_path), meta_path.string());
}

void write_heightmap(const ObjectModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string meta = fmt::format("id = {}\nresolution = {}\nrows = {}\ncols = {}\n", model.id,
                                         format_double(model.resolution), model.heights.rows(),
                                         model.heights.cols());
    std::string grid;
    for (std::size_t r = 0; r < model.heights.rows(); ++r) {
        for (std::size_t c = 0; c < model.heights.cols(); ++c) {
            if (c) grid.push_back(' ');
            grid += format_double(model.heights(r, c));
        }
        grid.push_back('\n');
    }
    write_text_file(dir / (model.id + ".meta"), meta);
    write_text_file(dir / (model.id + ".hgt"), grid);
}

Mesh read_obj(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    const std::string src = path.string();
    Mesh mesh;
    std::size_t lineno = 0;
    for (auto raw : split(text, '\n')) {
        ++lineno;
        const auto line = trim(raw);
        if (line.size() < 2 || line.front() == '#') continue;
        std::vector<std::string_view> tok;
        for (auto t : split(line, ' ')) {
            if (!trim(t).empty()) tok.push_back(trim(t));
        }
        if (tok[0] == "v") {
            if (tok.size() < 4) throw ParseError(src, lineno, "vertex needs 3 coordinates");
            mesh.vertices.push_back({parse_double(tok[1], src, lineno, "x"), parse_double(tok[2], src, lineno, "y"),
                                     parse_double(tok[3], src, lineno, "z")});
        } else if (tok[0] == "f") {
            if (tok.size() < 4) throw ParseError(src, lineno, "face needs at least 3 vertices");
            std::vector<std::uint32_t> idx;
            for (std::size_t i = 1; i < tok.size(); ++i) {
                const auto v = parse_int(split(tok[i], '/')[0], src, lineno, "vertex index");
                const auto n = static_cast<std::int64_t>(mesh.vertices.size());
                const auto resolved = v < 0 ? n + v : v - 1;
                if (resolved < 0 || resolved >= n) throw ParseError(src, lineno, "vertex index out of range");
                idx.push_back(static_cast<std::uint32_t>(resolved));
            }
            for (std::size_t i = 1; i + 1 < idx.size(); ++i) mesh.triangles.push_back({idx[0], idx[i], idx[i + 1]});
        }
    }
    return mesh;
}

Grid<double> rasterize_mesh(const Mesh& mesh, double resolution) {
    if (mesh.triangles.empty() || mesh.vertices.empty()) throw ValidationError("empty mesh");
    if (!(resolution > 0.0)) throw ValidationError("resolution must be positive");
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = -min_x;
    for (const auto& v : mesh.vertices) {
        if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2])) {
            throw ValidationError("mesh has a non-finite vertex");
        }
        min_x = std::min(min_x, v[0]);
        max_x = std::max(max_x, v[0]);
        min_y = std::min(min_y, v[1]);
        max_y = std::max(max_y, v[1]);
    }
    for (const auto& t : mesh.triangles) {
        for (auto i : t) {
            if (i >= mesh.vertices.size()) throw ValidationError("triangle references a missing vertex");
        }
    }
    const auto cols = static_cast<std::size_t>(std::max(1.0, std::ceil((max_x - min_x) / resolution - 1e-9)));
    const auto rows = static_cast<std::size_t>(std::max(1.0, std::ceil((max_y - min_y) / resolution - 1e-9)));
    Grid<double> out(rows, cols, 0.0);

    for (const auto& t : mesh.triangles) {
        const auto& a = mesh.vertices[t[0]];
        const auto& b = mesh.vertices[t[1]];
        const auto& c = mesh.vertices[t[2]];
        const double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        if (std::abs(det) < 1e-18) continue;  // vertical in plan view
        const double tx0 = std::min({a[0], b[0], c[0]}), tx1 = std::max({a[0], b[0], c[0]});
        const double ty0 = std::min({a[1], b[1], c[1]}), ty1 = std::max({a[1], b[1], c[1]});
        const auto c0 = static_cast<long>(std::floor((tx0 - min_x) / resolution - 0.5));
        const auto c1 = static_cast<long>(std::ceil((tx1 - min_x) / resolution - 0.5));
        const auto r0 = static_cast<long>(std::floor((max_y - ty1) / resolution - 0.5));
        const auto r1 = static_cast<long>(std::ceil((max_y - ty0) / resolution - 0.5));
        for (long r = std::max(0L, r0); r <= std::min<long>(static_cast<long>(rows) - 1, r1); ++r) {
            const double py = max_y - (static_cast<double>(r) + 0.5) * resolution;
            for (long cc = std::max(0L, c0); cc <= std::min<long>(static_cast<long>(cols) - 1, c1); ++cc) {
                const double px = min_x + (static_cast<double>(cc) + 0.5) * resolution;
                const double l1 = ((b[0] - px) * (c[1] - py) - (c[0] - px) * (b[1] - py)) / det;
                const double l2 = ((c[0] - px) * (a[1] - py) - (a[0] - px) * (c[1] - py)) / det;
                const double l3 = 1.0 - l1 - l2;
                constexpr double eps = -1e-12;
                if (l1 < eps || l2 < eps || l3 < eps) continue;
                const double z = std::max(0.0, l1 * a[2] + l2 * b[2] + l3 * c[2]);
                auto& cell = out(static_cast<std::size_t>(r), static_cast<std::size_t>(cc));
                cell = std::max(cell, z);
            }
        }
    }
    return out;
}

ObjectModel rescale_to(const ObjectModel& model, double longest_side_m) {
    const double current = model.longest_side();
    if (!(current > 0.0)) throw ValidationError(fmt::format("object {}: cannot rescale an empty object", model.id));
    const double s = longest_side_m / current;
    ObjectModel out = model;
    out.resolution = model.resolution * s;
    for (double& h : out.heights.data()) h *= s;
    out.mass = mass_for_longest_side(longest_side_m);
    return out;
}

ObjectModel rescale_object(const ObjectModel& model, Rng& rng) {
    return rescale_to(model, rng.uniform(kMinLongestSide, kMaxLongestSide));
}

void Camera::validate() const {
    if (rows <= 2 || cols <= 2) throw ValidationError("camera image must be larger than 2x2 pixels");
    if (!(resolution > 0.0)) throw ValidationError("camera resolution must be positive");
    if (!(height > 0.0)) throw ValidationError("camera height must be positive");
}

double Scene::height_at(double px, double py) const {
    const auto c = static_cast<long>(std::floor(px));
    const auto r = static_cast<long>(std::floor(py));
    if (!heights.contains(r, c)) return 0.0;
    return heights(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
}

std::array<double, 2> Scene::world_to_pixel(double wx, double wy) const {
    return {wx / camera.resolution + camera.cols / 2.0, camera.rows / 2.0 - wy / camera.resolution};
}

std::array<double, 2> Scene::pixel_to_world(double px, double py) const {
    return {(px - camera.cols / 2.0) * camera.resolution, (camera.rows / 2.0 - py) * camera.resolution};
}

std::uint16_t depth_level(double depth, double camera_height) {
    const double f = std::clamp(depth / camera_height, 0.0, 1.0);
    return static_cast<std::uint16_t>(std::lround(f * 65535.0));
}

double height_from_level(std::uint16_t level, double camera_height) {
    return camera_height * static_cast<double>(65535 - level) / 65535.0;
}

bool footprint_in_frame(const ObjectModel& model, const Pose& pose, const Camera& camera) {
    const Rotation rot(pose.yaw);
    const double half_w = camera.cols / 2.0 - 1.0;
    const double half_h = camera.rows / 2.0 - 1.0;
    for (const auto& p : extent_corners(model.extent())) {
        const double wx = rot.c * p.x - rot.s * p.y + pose.tx;
        const double wy = rot.s * p.x + rot.c * p.y + pose.ty;
        if (std::abs(wx / camera.resolution) > half_w || std::abs(wy / camera.resolution) > half_h) return false;
    }
    return true;
}

Scene make_scene(const ObjectModel& model, const Pose& pose, const Camera& camera, std::string scene_id,
                 std::uint64_t seed) {
    model.validate();
    camera.validate();
    if (!footprint_in_frame(model, pose, camera)) {
        throw ValidationError(fmt::format("object {} leaves the camera frame at the requested pose", model.id));
    }
    Scene s;
    s.scene_id = std::move(scene_id);
    s.object_id = model.id;
    s.longest_side = model.longest_side();
    s.mass = model.mass;
    s.object_resolution = model.resolution;
    s.pose = pose;
    s.camera = camera;
    s.seed = seed;
    s.heights = Grid<double>(static_cast<std::size_t>(camera.rows), static_cast<std::size_t>(camera.cols), 0.0);

    const Rotation rot(pose.yaw);
    const double half_cols = static_cast<double>(model.heights.cols()) / 2.0;
    const double half_rows = static_cast<double>(model.heights.rows()) / 2.0;
    for (std::size_t r = 0; r < s.heights.rows(); ++r) {
        for (std::size_t c = 0; c < s.heights.cols(); ++c) {
            const auto [wx, wy] = s.pixel_to_world(static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5);
            const double dx = wx - pose.tx;
            const double dy = wy - pose.ty;
            const double xo = rot.c * dx + rot.s * dy;
            const double yo = -rot.s * dx + rot.c * dy;
            const auto oc = static_cast<long>(std::floor(xo / model.resolution + half_cols));
            const auto orow = static_cast<long>(std::floor(half_rows - yo / model.resolution));
            if (!model.heights.contains(orow, oc)) continue;
            const double h = model.heights(static_cast<std::size_t>(orow), static_cast<std::size_t>(oc));
            if (h <= 0.0) continue;
            s.heights(r, c) = height_from_level(depth_level(camera.height - h, camera.height), camera.height);
        }
    }
    return s;
}

Scene settle(const ObjectModel& model, Rng& rng, const Camera& camera, std::string scene_id, std::uint64_t seed) {
    camera.validate();
    const auto corners = extent_corners(model.extent());
    const double slack = 1e-9;
    const double half_w = (camera.cols / 2.0 - 1.0) * camera.resolution - slack;
    const double half_h = (camera.rows / 2.0 - 1.0) * camera.resolution - slack;
    for (int attempt = 0; attempt < kMaxYawAttempts; ++attempt) {
        const double yaw = 180.0 - 360.0 * rng.uniform();
        const Rotation rot(yaw);
        double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
        for (const auto& p : corners) {
            const double wx = rot.c * p.x - rot.s * p.y;
            const double wy = rot.s * p.x + rot.c * p.y;
            x0 = std::min(x0, wx);
            x1 = std::max(x1, wx);
            y0 = std::min(y0, wy);
            y1 = std::max(y1, wy);
        }
        const double tx_lo = -half_w - x0, tx_hi = half_w - x1;
        const double ty_lo = -half_h - y0, ty_hi = half_h - y1;
        if (tx_lo > tx_hi || ty_lo > ty_hi) continue;
        const Pose pose{rng.uniform(tx_lo, tx_hi), rng.uniform(ty_lo, ty_hi), yaw};
        if (!footprint_in_frame(model, pose, camera)) continue;
        return make_scene(model, pose, camera, std::move(scene_id), seed);
    }
    throw ValidationError(fmt::format("object {} (longest side {} m) does not fit in the camera frame", model.id,
                                      model.longest_side()));
}

Grid<double> render_depth(const Scene& scene) {
    Grid<double> depth(scene.heights.rows(), scene.heights.cols());
    for (std::size_t i = 0; i < depth.size(); ++i) depth.data()[i] = scene.camera.height - scene.heights.data()[i];
    return depth;
}

Grid<std::uint8_t> render_mask(const Scene& scene) {
    Grid<std::uint8_t> mask(scene.heights.rows(), scene.heights.cols());
    for (std::size_t i = 0; i < mask.size(); ++i) mask.data()[i] = scene.heights.data()[i] > 0.0 ? 1 : 0;
    return mask;
}

void write_scene(const Scene& scene, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    Grid<std::uint16_t> depth(scene.heights.rows(), scene.heights.cols());
    Grid<std::uint16_t> mask(scene.heights.rows(), scene.heights.cols());
    for (std::size_t i = 0; i < depth.size(); ++i) {
        const double h = scene.heights.data()[i];
        depth.data()[i] = depth_level(scene.camera.height - h, scene.camera.height);
        mask.data()[i] = h > 0.0 ? 1 : 0;
    }
    write_pgm(dir / "depth.pgm", depth, 65535);
    write_pgm(dir / "mask.pgm", mask, 1);

    std::string meta;
    meta += fmt::format("scene_id = {}\n", scene.scene_id);
    meta += fmt::format("object_id = {}\n", scene.object_id);
    meta += fmt::format("seed = {}\n", scene.seed);
    meta += fmt::format("longest_side = {}\n", format_double(scene.longest_side));
    meta += fmt::format("mass = {}\n", format_double(scene.mass));
    meta += fmt::format("object_resolution = {}\n", format_double(scene.object_resolution));
    meta += fmt::format("pose_tx = {}\n", format_double(scene.pose.tx));
    meta += fmt::format("pose_ty = {}\n", format_double(scene.pose.ty));
    meta += fmt::format("pose_yaw = {}\n", format_double(scene.pose.yaw));
    meta += fmt::format("camera_rows = {}\n", scene.camera.rows);
    meta += fmt::format("camera_cols = {}\n", scene.camera.cols);
    meta += fmt::format("camera_resolution = {}\n", format_double(scene.camera.resolution));
    meta += fmt::format("camera_height = {}\n", format_double(scene.camera.height));
    write_text_file(dir / "scene.txt", meta);
}

Scene read_scene(const std::filesystem::path& dir) {
    const auto meta_path = dir / "scene.txt";
    const auto kv = KeyValues::parse(read_text_file(meta_path), meta_path.string());
    Scene s;
    s.scene_id = kv.str("scene_id");
    s.object_id = kv.str("object_id");
    s.seed = kv.uint64("seed");
    s.longest_side = kv.number("longest_side");
    s.mass = kv.number("mass");
    s.object_resolution = kv.number("object_resolution");
    s.pose = {kv.number("pose_tx"), kv.number("pose_ty"), kv.number("pose_yaw")};
    s.camera.rows = static_cast<int>(kv.integer("camera_rows"));
    s.camera.cols = static_cast<int>(kv.integer("camera_cols"));
    s.camera.resolution = kv.number("camera_resolution");
    s.camera.height = kv.number("camera_height");
    s.camera.validate();
    if (!(s.mass > 0.0)) throw ParseError(meta_path.string(), 0, "mass must be positive");

    const auto depth = read_pgm(dir / "depth.pgm");
    if (depth.maxval != 65535 || depth.pixels.rows() != static_cast<std::size_t>(s.camera.rows) ||
        depth.pixels.cols() != static_cast<std::size_t>(s.camera.cols)) {
        throw ParseError((dir / "depth.pgm").string(), 0, "depth image does not match the camera in scene.txt");
    }
    s.heights = Grid<double>(depth.pixels.rows(), depth.pixels.cols());
    for (std::size_t i = 0; i < s.heights.size(); ++i) {
        s.heights.data()[i] = height_from_level(depth.pixels.data()[i], s.camera.height);
    }
    return s;
}

}  // namespace graspsynth
