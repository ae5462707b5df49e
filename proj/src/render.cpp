#include "taskgrid/render.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "taskgrid/detail/tan_table.hpp"
#include "taskgrid/netpbm.hpp"

namespace taskgrid {

namespace {

using i64 = std::int64_t;

constexpr i64 kOne = i64{1} << 16;
constexpr i64 kHalf = i64{1} << 15;
constexpr int kPitchStepHalfDegrees = 60;  // 30 degrees

i64 floor_div(i64 a, i64 b) {
  i64 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

i64 ceil_div(i64 a, i64 b) { return -floor_div(-a, b); }

/// round(num / den) for num >= 0, den > 0, halves away from zero.
i64 div_round(i64 num, i64 den) { return (2 * num + den) / (2 * den); }

constexpr Rgb kWallX = {200, 200, 200};
constexpr Rgb kWallZ = {150, 150, 150};

struct Drawable {
  std::uint16_t instance;
  std::uint16_t cls;
  int base_mm;
  int top_mm;
  Rgb color;
};

/// Distance from eye level to the nearest part of a box. Within one cell
/// boxes are drawn in increasing order of this key so stacked boxes occlude
/// each other correctly.
int eye_gap(const Drawable& d) {
  if (d.top_mm < kEyeHeightMm) return kEyeHeightMm - d.top_mm;
  if (d.base_mm > kEyeHeightMm) return d.base_mm - kEyeHeightMm;
  return 0;
}

struct Camera {
  i64 focal_q16;    // focal length in pixels, Q16
  i64 horizon_q16;  // row of the horizon, Q16
  int height;

  i64 row_q16(i64 y_mm, i64 depth_mm) const {
    return horizon_q16 - floor_div((y_mm - kEyeHeightMm) * focal_q16, depth_mm);
  }
  /// First pixel row whose centre lies at or below `q`.
  int first_row(i64 q) const {
    i64 r = ceil_div(q - kHalf, kOne);
    return static_cast<int>(std::clamp<i64>(r, 0, height));
  }
};

class ColumnWriter {
 public:
  ColumnWriter(FrameBundle& f, int column, int far_mm)
      : f_(f), column_(column), far_mm_(far_mm), filled_(f.height, false),
        remaining_(f.height) {}

  bool done() const { return remaining_ == 0; }

  void put(int row, i64 depth, std::uint16_t inst, std::uint16_t cls,
           Rgb color) {
    if (filled_[row]) return;
    filled_[row] = true;
    --remaining_;
    const auto d = static_cast<int>(std::clamp<i64>(depth, 1, far_mm_));
    const auto idx = f_.pixel(column_, row);
    f_.depth[idx] = static_cast<std::uint16_t>(d);
    f_.instance_seg[idx] = inst;
    f_.class_seg[idx] = cls;
    const int shade = 256 - d * 160 / far_mm_;
    for (int ch = 0; ch < 3; ++ch)
      f_.rgb[idx * 3 + ch] = static_cast<std::uint8_t>((color[ch] * shade) >> 8);
  }

  void fill_rest(i64 depth, Rgb color) {
    for (int r = 0; r < f_.height && remaining_ > 0; ++r)
      put(r, depth, 0, 0, color);
  }

 private:
  FrameBundle& f_;
  int column_;
  int far_mm_;
  std::vector<bool> filled_;
  int remaining_;
};

void draw_box(ColumnWriter& out, const Camera& cam, const Drawable& d,
              i64 near_mm, i64 far_face_mm) {
  if (d.top_mm <= d.base_mm) return;
  // Near face.
  {
    const int r0 = cam.first_row(cam.row_q16(d.top_mm, near_mm));
    const int r1 = cam.first_row(cam.row_q16(d.base_mm, near_mm));
    for (int r = r0; r < r1; ++r) out.put(r, near_mm, d.instance, d.cls, d.color);
  }
  if (far_face_mm <= near_mm) return;
  if (d.top_mm < kEyeHeightMm) {
    const int r0 = cam.first_row(cam.row_q16(d.top_mm, far_face_mm));
    const int r1 = cam.first_row(cam.row_q16(d.top_mm, near_mm));
    for (int r = r0; r < r1; ++r) {
      const i64 below = r * kOne + kHalf - cam.horizon_q16;
      const i64 depth =
          below > 0 ? (i64{kEyeHeightMm - d.top_mm} * cam.focal_q16) / below
                    : far_face_mm;
      out.put(r, std::clamp(depth, near_mm, far_face_mm), d.instance, d.cls,
              d.color);
    }
  }
  if (d.base_mm > kEyeHeightMm) {
    const int r0 = cam.first_row(cam.row_q16(d.base_mm, near_mm));
    const int r1 = cam.first_row(cam.row_q16(d.base_mm, far_face_mm));
    for (int r = r0; r < r1; ++r) {
      const i64 above = cam.horizon_q16 - (r * kOne + kHalf);
      const i64 depth =
          above > 0 ? (i64{d.base_mm - kEyeHeightMm} * cam.focal_q16) / above
                    : far_face_mm;
      out.put(r, std::clamp(depth, near_mm, far_face_mm), d.instance, d.cls,
              d.color);
    }
  }
}

}  // namespace

void RenderConfig::validate() const {
  if (width < 8 || height < 8)
    throw std::invalid_argument("render size must be at least 8x8");
  if (fov_degrees < 30 || fov_degrees > 120)
    throw std::invalid_argument("fov must lie in [30, 120] degrees");
  if (far_plane_mm && (*far_plane_mm <= 0 || *far_plane_mm > 65535))
    throw std::invalid_argument("far plane must lie in (0, 65535] mm");
}

int RenderConfig::far_plane_for(const Scene& scene) const {
  return far_plane_mm.value_or(
      std::min(65535, kDefaultFarPlaneCells * scene.cell_size_mm));
}

FrameLegend FrameLegend::for_scene(const Scene& scene) {
  FrameLegend legend;
  for (const auto& o : scene.objects) legend.classes.push_back(o.object_class);
  std::sort(legend.classes.begin(), legend.classes.end());
  legend.classes.erase(
      std::unique(legend.classes.begin(), legend.classes.end()),
      legend.classes.end());
  for (const auto& o : scene.objects)
    legend.instance_class.push_back(legend.class_index(o.object_class));
  return legend;
}

std::uint16_t FrameLegend::class_index(const std::string& name) const {
  auto it = std::lower_bound(classes.begin(), classes.end(), name);
  if (it == classes.end() || *it != name) return 0;
  return static_cast<std::uint16_t>(it - classes.begin() + 1);
}

Rgb class_color(const std::string& class_name) {
  std::uint32_t h = 2166136261u;  // FNV-1a
  for (unsigned char c : class_name) {
    h ^= c;
    h *= 16777619u;
  }
  return {static_cast<std::uint8_t>(55 + h % 200),
          static_cast<std::uint8_t>(55 + (h >> 8) % 200),
          static_cast<std::uint8_t>(55 + (h >> 16) % 200)};
}

FrameBundle render(const EnvState& env, const RenderConfig& cfg) {
  cfg.validate();
  const Scene& scene = *env.scene;
  const int W = cfg.width;
  const int H = cfg.height;
  const int far_mm = cfg.far_plane_for(scene);
  const i64 cs = scene.cell_size_mm;

  FrameBundle f;
  f.width = W;
  f.height = H;
  f.tick = env.tick;
  const auto n = static_cast<std::size_t>(W) * H;
  f.rgb.assign(n * 3, 0);
  f.depth.assign(n, 0);
  f.instance_seg.assign(n, 0);
  f.class_seg.assign(n, 0);

  Camera cam{};
  cam.height = H;
  cam.focal_q16 = static_cast<i64>((static_cast<__int128>(W) << 45) /
                                   detail::tan_q30(cfg.fov_degrees));
  const i64 pitch_shift =
      static_cast<i64>((static_cast<__int128>(detail::tan_q30(
                            kPitchStepHalfDegrees)) *
                        cam.focal_q16) >>
                       30);
  cam.horizon_q16 = (i64{H} << 15) + (env.agent.pitch / 30) * pitch_shift;

  const FrameLegend legend = FrameLegend::for_scene(scene);
  std::vector<std::vector<Drawable>> by_cell(
      static_cast<std::size_t>(scene.width) * scene.depth);
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    if (concealed(env, i)) continue;
    const Cell c = *env.objects[i].cell;
    const int base = support_height_mm(env, i);
    by_cell[static_cast<std::size_t>(c.z) * scene.width + c.x].push_back(
        {static_cast<std::uint16_t>(i + 1), legend.instance_class[i], base,
         base + scene.objects[i].height_mm,
         class_color(scene.objects[i].object_class)});
  }
  for (auto& list : by_cell)
    std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
      return eye_gap(a) < eye_gap(b);
    });

  const Cell start = env.agent.cell;
  const i64 ox = start.x * cs + cs / 2;
  const i64 oz = start.z * cs + cs / 2;
  const i64 F = cam.focal_q16;

  for (int col = 0; col < W; ++col) {
    const i64 L = static_cast<i64>(2 * col + 1 - W) * kHalf;
    i64 dx = 0, dz = 0;
    switch (env.agent.heading) {
      case 0: dx = L; dz = F; break;
      case 90: dx = F; dz = -L; break;
      case 180: dx = -L; dz = -F; break;
      default: dx = -F; dz = L; break;
    }
    const int sx = (dx > 0) - (dx < 0);
    const int sz = (dz > 0) - (dz < 0);
    const i64 adx = dx < 0 ? -dx : dx;
    const i64 adz = dz < 0 ? -dz : dz;

    ColumnWriter out(f, col, far_mm);
    Cell cur = start;
    i64 enter_mm = 0;
    for (;;) {
      const i64 bx = sx > 0 ? (cur.x + 1) * cs : cur.x * cs;
      const i64 bz = sz > 0 ? (cur.z + 1) * cs : cur.z * cs;
      const i64 dist_x = sx != 0 ? (bx > ox ? bx - ox : ox - bx) : 0;
      const i64 dist_z = sz != 0 ? (bz > oz ? bz - oz : oz - bz) : 0;
      const bool cross_x =
          sz == 0 || (sx != 0 && dist_x * adz <= dist_z * adx);
      const i64 exit_mm =
          cross_x ? div_round(dist_x * F, adx) : div_round(dist_z * F, adz);

      if (cur != start) {
        for (const auto& d :
             by_cell[static_cast<std::size_t>(cur.z) * scene.width + cur.x])
          draw_box(out, cam, d, enter_mm, exit_mm);
      }
      if (out.done()) break;

      cur = cross_x ? Cell{cur.x + sx, cur.z} : Cell{cur.x, cur.z + sz};
      enter_mm = exit_mm;
      if (enter_mm >= far_mm) {
        out.fill_rest(far_mm, {0, 0, 0});
        break;
      }
      if (!scene.in_bounds(cur) || scene.walls.contains(cur)) {
        out.fill_rest(enter_mm, cross_x ? kWallX : kWallZ);
        break;
      }
    }
  }
  return f;
}

std::vector<FrameBundle> render_episode(const Scene& scene,
                                        std::span<const AtomicAction> actions,
                                        const RenderConfig& cfg) {
  std::vector<FrameBundle> frames;
  frames.reserve(actions.size() + 1);
  EnvState env = init_env(scene);
  frames.push_back(render(env, cfg));
  frames.back().tick = 0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const Event& ev = apply_action(env, actions[i]);
    if (ev.ok())
      frames.push_back(render(env, cfg));
    else
      frames.push_back(frames.back());
    frames.back().tick = static_cast<int>(i + 1);
  }
  return frames;
}

namespace {

std::string frame_name(const char* prefix, int tick, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05d.%s", prefix, tick, ext);
  return buf;
}

}  // namespace

EncodedFrameSet encode_frames(std::span<const FrameBundle> bundles,
                              const std::filesystem::path& directory,
                              const Scene& scene,
                              std::span<const AtomicAction> actions,
                              std::span<const std::string> outcomes) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec)
    throw IoError("cannot create '" + directory.string() + "': " + ec.message());

  EncodedFrameSet out;
  const FrameLegend legend = FrameLegend::for_scene(scene);
  Json frames = Json::array();
  for (const auto& b : bundles) {
    const auto rgb = directory / frame_name("rgb", b.tick, "ppm");
    const auto depth = directory / frame_name("depth", b.tick, "pgm");
    const auto inst = directory / frame_name("inst", b.tick, "pgm");
    const auto cls = directory / frame_name("class", b.tick, "pgm");
    netpbm::write_file(rgb.string(), netpbm::encode_ppm(b.width, b.height, b.rgb));
    netpbm::write_file(depth.string(),
                       netpbm::encode_pgm16(b.width, b.height, b.depth));
    netpbm::write_file(inst.string(),
                       netpbm::encode_pgm16(b.width, b.height, b.instance_seg));
    netpbm::write_file(cls.string(),
                       netpbm::encode_pgm16(b.width, b.height, b.class_seg));
    out.files.insert(out.files.end(), {rgb, depth, inst, cls});

    Json jf;
    jf["tick"] = b.tick;
    const bool has_action =
        b.tick >= 1 && static_cast<std::size_t>(b.tick) <= actions.size();
    jf["action"] = has_action ? Json(actions[b.tick - 1].label()) : Json(nullptr);
    if (has_action && static_cast<std::size_t>(b.tick) <= outcomes.size())
      jf["outcome"] = outcomes[b.tick - 1];
    jf["rgb"] = rgb.filename().string();
    jf["depth"] = depth.filename().string();
    jf["instance"] = inst.filename().string();
    jf["class"] = cls.filename().string();
    frames.push_back(std::move(jf));
  }

  Json classes = Json::array();
  classes.push_back({{"index", 0}, {"name", nullptr}, {"rgb", {0, 0, 0}}});
  for (std::size_t i = 0; i < legend.classes.size(); ++i) {
    Rgb c = class_color(legend.classes[i]);
    classes.push_back({{"index", i + 1},
                       {"name", legend.classes[i]},
                       {"rgb", {c[0], c[1], c[2]}}});
  }
  Json instances = Json::array();
  for (std::size_t i = 0; i < scene.objects.size(); ++i)
    instances.push_back({{"index", i + 1},
                         {"id", scene.objects[i].id},
                         {"class", scene.objects[i].object_class},
                         {"class_index", legend.instance_class[i]}});

  out.manifest = {{"frames_version", 1},
                  {"scene_id", scene.id},
                  {"width", bundles.empty() ? 0 : bundles.front().width},
                  {"height", bundles.empty() ? 0 : bundles.front().height},
                  {"depth_units", "millimetres"},
                  {"classes", std::move(classes)},
                  {"instances", std::move(instances)},
                  {"frames", std::move(frames)}};
  const auto manifest_path = directory / "frames.json";
  netpbm::write_file(manifest_path.string(), out.manifest.dump(2) + "\n");
  out.files.push_back(manifest_path);
  return out;
}

DecodedFrame decode_frame(const std::filesystem::path& directory, int tick) {
  auto rgb = netpbm::decode_ppm(
      netpbm::read_file((directory / frame_name("rgb", tick, "ppm")).string()));
  auto depth = netpbm::decode_pgm16(netpbm::read_file(
      (directory / frame_name("depth", tick, "pgm")).string()));
  auto inst = netpbm::decode_pgm16(netpbm::read_file(
      (directory / frame_name("inst", tick, "pgm")).string()));
  auto cls = netpbm::decode_pgm16(netpbm::read_file(
      (directory / frame_name("class", tick, "pgm")).string()));
  return {rgb.width, rgb.height, std::move(rgb.data), std::move(depth.data),
          std::move(inst.data), std::move(cls.data)};
}

}  // namespace taskgrid
