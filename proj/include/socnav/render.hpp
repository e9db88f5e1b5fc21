#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "socnav/binio.hpp"
#include "socnav/cost_map.hpp"
#include "socnav/scoring.hpp"
#include "socnav/sim.hpp"

namespace socnav {

// Binary PGM (P5), one byte per pixel, no metadata beyond the dimensions.
inline std::string pgm_encode(int rows, int cols, const std::vector<uint8_t>& pixels) {
  std::ostringstream os;
  os << "P5\n" << cols << " " << rows << "\n255\n";
  os.write(reinterpret_cast<const char*>(pixels.data()),
           static_cast<std::streamsize>(pixels.size()));
  return os.str();
}

// Map rendering: 0 -> dark, 1 -> light, robot marker cross at the centre.
inline std::string render_costmap_pgm(const CostMap& map, int scale = 1,
                                      bool marker = true) {
  const int n = map.n * scale;
  std::vector<uint8_t> px(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = std::clamp(map.at(i / scale, j / scale), 0.0, 1.0);
      px[static_cast<size_t>(i) * n + j] = static_cast<uint8_t>(std::lround(v * 255.0));
    }
  }
  if (marker) {
    const int c = n / 2;
    for (int d = -2 * scale; d <= 2 * scale; ++d) {
      const int i = c + d;
      if (i >= 0 && i < n) {
        px[static_cast<size_t>(i) * n + c] = 255 - px[static_cast<size_t>(i) * n + c];
        px[static_cast<size_t>(c) * n + i] = 255 - px[static_cast<size_t>(c) * n + i];
      }
    }
  }
  return pgm_encode(n, n, px);
}

// Lossless text form of the raw matrix, one row per line.
inline std::string costmap_csv(const CostMap& map) {
  std::ostringstream os;
  char buf[40];
  for (int i = 0; i < map.n; ++i) {
    for (int j = 0; j < map.n; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", map.at(i, j));
      os << buf << (j + 1 < map.n ? "," : "");
    }
    os << "\n";
  }
  return os.str();
}

inline CostMap costmap_from_csv(const std::string& text, double w) {
  std::vector<std::vector<double>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  CostMap map(static_cast<int>(rows.size()), w);
  for (int i = 0; i < map.n; ++i) {
    for (int j = 0; j < map.n; ++j) map.at(i, j) = rows[i][j];
  }
  return map;
}

// World-frame overview of an episode: teacher score field as backdrop, human
// tracks in dark grey, robot trajectory in white, goal marker.
inline std::string render_episode_pgm(const EpisodeResult& ep, const SocialParams& social,
                                      double pixels_per_meter = 24.0) {
  const auto& room = ep.scenario.room;
  double min_x = room[0].x, max_x = room[0].x, min_y = room[0].y, max_y = room[0].y;
  for (const auto& v : room) {
    min_x = std::min(min_x, v.x);
    max_x = std::max(max_x, v.x);
    min_y = std::min(min_y, v.y);
    max_y = std::max(max_y, v.y);
  }
  const double margin = 0.5;
  min_x -= margin;
  min_y -= margin;
  max_x += margin;
  max_y += margin;
  const int cols = std::max(8, static_cast<int>((max_x - min_x) * pixels_per_meter));
  const int rows = std::max(8, static_cast<int>((max_y - min_y) * pixels_per_meter));

  // +x up in the image, +y to the left (matching map orientation).
  auto to_px = [&](Vec2 p) -> std::pair<int, int> {
    const int col = static_cast<int>((max_y - p.y) / (max_y - min_y) * (cols - 1));
    const int row = static_cast<int>((max_x - p.x) / (max_x - min_x) * (rows - 1));
    return {row, col};
  };
  auto from_px = [&](int row, int col) -> Vec2 {
    const double x = max_x - (max_x - min_x) * row / (rows - 1);
    const double y = max_y - (max_y - min_y) * col / (cols - 1);
    return {x, y};
  };

  // Score field sampled at the final human configuration.
  Scenario last = ep.scenario;
  for (size_t k = 0; k < last.humans.size(); ++k) {
    last.humans[k].pose = ep.human_tracks[k].back().pose;
  }
  std::vector<uint8_t> px(static_cast<size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double score = 1.0 - disruption_at(last, from_px(r, c), social);
      px[static_cast<size_t>(r) * cols + c] =
          static_cast<uint8_t>(std::lround(std::clamp(score, 0.0, 1.0) * 200.0));
    }
  }
  auto put = [&](Vec2 p, uint8_t value, int radius = 1) {
    const auto [r, c] = to_px(p);
    for (int dr = -radius; dr <= radius; ++dr) {
      for (int dc = -radius; dc <= radius; ++dc) {
        const int rr = r + dr, cc = c + dc;
        if (rr >= 0 && rr < rows && cc >= 0 && cc < cols) {
          px[static_cast<size_t>(rr) * cols + cc] = value;
        }
      }
    }
  };
  for (const auto& track : ep.human_tracks) {
    for (const auto& tp : track) put(tp.pose.position(), 40, 0);
  }
  for (size_t k = 0; k < ep.human_tracks.size(); ++k) {
    put(ep.human_tracks[k].back().pose.position(), 20, 2);
  }
  for (const auto& tp : ep.trajectory) put(tp.pose.position(), 255, 0);
  put(ep.scenario.goal, 230, 2);
  put(ep.trajectory.front().pose.position(), 250, 1);
  return pgm_encode(rows, cols, px);
}

}  // namespace socnav
