#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "surgplan/volume.hpp"

namespace testing_support {

inline std::string data_path(const std::string& name) { return std::string(SURGPLAN_TEST_DATA) + "/" + name; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// uint8 volume with identity geometry and values drawn from [0, 255].
inline surgplan::Volume random_u8_volume(std::mt19937_64& rng, std::size_t nx, std::size_t ny,
                                         std::size_t nz) {
  surgplan::VolumeHeader h;
  h.sizes = {nx, ny, nz};
  std::vector<std::uint8_t> v(nx * ny * nz);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& x : v) x = static_cast<std::uint8_t>(d(rng));
  return surgplan::Volume(h, std::move(v));
}

template <typename F>
surgplan::Volume volume_from(surgplan::VolumeHeader h, F&& value) {
  std::vector<double> vals;
  for (std::size_t k = 0; k < h.sizes[2]; ++k)
    for (std::size_t j = 0; j < h.sizes[1]; ++j)
      for (std::size_t i = 0; i < h.sizes[0]; ++i) vals.push_back(value(i, j, k));
  return surgplan::make_volume(h, vals);
}

}  // namespace testing_support
