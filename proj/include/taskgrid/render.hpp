#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskgrid/env.hpp"

namespace taskgrid {

inline constexpr int kEyeHeightMm = 1000;
inline constexpr int kDefaultFarPlaneCells = 20;

struct RenderConfig {
  int width = 160;
  int height = 120;
  int fov_degrees = 90;            ///< horizontal
  std::optional<int> far_plane_mm;  ///< default: 20 cells of the scene

  /// Throws std::invalid_argument unless width, height >= 8,
  /// 30 <= fov <= 120 and the far plane fits 16-bit millimetres.
  void validate() const;
  int far_plane_for(const Scene& scene) const;
};

/// One timestep of annotation rasters, all row-major, top row first.
struct FrameBundle {
  int width = 0;
  int height = 0;
  int tick = 0;
  std::vector<std::uint8_t> rgb;            ///< width * height * 3
  std::vector<std::uint16_t> depth;         ///< millimetres, planar
  std::vector<std::uint16_t> instance_seg;  ///< object index + 1, 0 = none
  std::vector<std::uint16_t> class_seg;     ///< class index, 0 = none

  std::size_t pixel(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  bool operator==(const FrameBundle&) const = default;
};

using Rgb = std::array<std::uint8_t, 3>;

/// Per-scene index tables: instance i + 1 is scene object i; class indices
/// are 1-based over the sorted distinct class names.
struct FrameLegend {
  std::vector<std::string> classes;
  std::vector<std::uint16_t> instance_class;  ///< by object index

  static FrameLegend for_scene(const Scene& scene);
  std::uint16_t class_index(const std::string& name) const;
};

Rgb class_color(const std::string& class_name);

FrameBundle render(const EnvState& env, const RenderConfig& cfg = {});

/// Frames for the initial state and after every action (Failed ones
/// included); ticks are frame positions 0..n.
std::vector<FrameBundle> render_episode(const Scene& scene,
                                        std::span<const AtomicAction> actions,
                                        const RenderConfig& cfg = {});

struct EncodedFrameSet {
  std::vector<std::filesystem::path> files;
  Json manifest;
};

/// Writes rgb/depth/inst/class rasters per tick plus `frames.json`.
/// `outcomes`, when given, is one label per action ("Ok" or the failure).
EncodedFrameSet encode_frames(std::span<const FrameBundle> bundles,
                              const std::filesystem::path& directory,
                              const Scene& scene,
                              std::span<const AtomicAction> actions,
                              std::span<const std::string> outcomes = {});

struct DecodedFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
  std::vector<std::uint16_t> depth;
  std::vector<std::uint16_t> instance_seg;
  std::vector<std::uint16_t> class_seg;
};

DecodedFrame decode_frame(const std::filesystem::path& directory, int tick);

}  // namespace taskgrid
