#pragma once

#include <array>
#include <cstdint>

namespace taskgrid::detail {

/// tan(k / 2 degrees) in Q30 for k = 0..120 (0 to 60 degrees), rounded to
/// nearest. Generated offline at 50 significant digits.
inline constexpr std::array<std::int64_t, 121> kTanHalfDegreeQ30 = {
    0, 9370403, 18742233, 28116919, 37495891, 46880580,
    56272425, 65672863, 75083343, 84505314, 93940237, 103389578,
    112854813, 122337428, 131838918, 141360793, 150904572, 160471791,
    170063998, 179682758, 189329654, 199006284, 208714268, 218455243,
    228230870, 238042831, 247892833, 257782605, 267713905, 277688517,
    287708255, 297774962, 307890514, 318056818, 328275820, 338549497,
    348879867, 359268989, 369718960, 380231922, 390810063, 401455618,
    412170869, 422958153, 433819857, 444758426, 455776363, 466876233,
    478060661, 489332341, 500694035, 512148578, 523698879, 535347925,
    547098786, 558954614, 570918655, 582994243, 595184812, 607493895,
    619925131, 632482270, 645169177, 657989836, 670948358, 684048984,
    697296094, 710694210, 724248005, 737962310, 751842119, 765892600,
    780119099, 794527154, 809122500, 823911080, 838899054, 854092812,
    869498985, 885124454, 900976368, 917062153, 933389527, 949966519,
    966801481, 983903106, 1001280449, 1018942945, 1036900426, 1055163152,
    1073741824, 1092647618, 1111892208, 1131487794, 1151447135, 1171783580,
    1192511107, 1213644356, 1235198672, 1257190149, 1279635676, 1302552990,
    1325960725, 1349878477, 1374326863, 1399327589, 1424903527, 1451078794,
    1477878834, 1505330519, 1533462246, 1562304048, 1591887719, 1622246937,
    1653417415, 1685437055, 1718346116, 1752187407, 1787006487, 1822851894,
    1859775393};

/// tan of an angle given in half degrees, 0 <= half_degrees <= 120.
constexpr std::int64_t tan_q30(int half_degrees) {
  return kTanHalfDegreeQ30[static_cast<std::size_t>(half_degrees)];
}

}  // namespace taskgrid::detail
