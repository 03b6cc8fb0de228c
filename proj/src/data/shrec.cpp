#include "dstsa/data/shrec.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dstsa/errors.hpp"

namespace dstsa::data {

namespace {

std::ifstream open_or_throw(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw InputError("cannot open " + file.string());
  return in;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

std::vector<ShrecIndexRow> read_shrec_index(const std::filesystem::path& file) {
  auto in = open_or_throw(file);
  std::vector<ShrecIndexRow> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (blank(line)) continue;
    std::istringstream fields(line);
    std::vector<long> values;
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      long v = 0;
      try {
        v = std::stol(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) {
        throw FormatError(file.string() + ":" + std::to_string(number) + ": '" + token +
                          "' is not an integer");
      }
      values.push_back(v);
    }
    if (values.size() != 7) {
      throw FormatError(file.string() + ":" + std::to_string(number) + ": expected 7 fields, got " +
                        std::to_string(values.size()));
    }
    ShrecIndexRow row{static_cast<int>(values[0]), static_cast<int>(values[1]),
                      static_cast<int>(values[2]), static_cast<int>(values[3]),
                      static_cast<int>(values[4]), static_cast<int>(values[5]),
                      static_cast<int>(values[6])};
    if (row.label14 < 1 || row.label28 < 1 || row.frames < 1) {
      throw FormatError(file.string() + ":" + std::to_string(number) +
                        ": labels and frame count must be positive");
    }
    rows.push_back(row);
  }
  return rows;
}

std::filesystem::path shrec_sequence_path(const std::filesystem::path& root,
                                          const ShrecIndexRow& row) {
  return root / ("gesture_" + std::to_string(row.gesture)) /
         ("finger_" + std::to_string(row.finger)) / ("subject_" + std::to_string(row.subject)) /
         ("essai_" + std::to_string(row.trial)) / "skeletons_world.txt";
}

Tensor<double> read_shrec_coordinates(const std::filesystem::path& file, std::size_t joints,
                                      std::size_t expected_frames) {
  auto in = open_or_throw(file);
  const std::size_t width = 3 * joints;
  std::vector<std::vector<double>> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (blank(line)) continue;
    std::vector<double> values;
    values.reserve(width);
    const char* p = line.c_str();
    char* end = nullptr;
    while (true) {
      while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
      if (*p == '\0') break;
      const double v = std::strtod(p, &end);
      if (end == p) {
        throw FormatError(file.string() + ":" + std::to_string(number) + ": unparsable value");
      }
      if (!std::isfinite(v)) {
        throw IntegrityError(file.string() + ":" + std::to_string(number) +
                             ": non-finite coordinate");
      }
      values.push_back(v);
      p = end;
    }
    if (values.size() != width) {
      throw FormatError(file.string() + ":" + std::to_string(number) + ": expected " +
                        std::to_string(width) + " floats, got " + std::to_string(values.size()));
    }
    lines.push_back(std::move(values));
  }
  if (lines.size() != expected_frames) {
    throw IntegrityError(file.string() + ": index lists " + std::to_string(expected_frames) +
                         " frames, file has " + std::to_string(lines.size()));
  }
  const std::size_t frames = lines.size();
  Tensor<double> coords(Shape{3, frames, joints});
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t v = 0; v < joints; ++v) {
      for (std::size_t c = 0; c < 3; ++c) coords.at({c, t, v}) = lines[t][v * 3 + c];
    }
  }
  return coords;
}

std::vector<SkeletonSequence> parse_shrec(const std::filesystem::path& root,
                                          const std::string& index_file) {
  const GraphSpec graph = hand22();
  std::vector<SkeletonSequence> out;
  for (const auto& row : read_shrec_index(root / index_file)) {
    SkeletonSequence seq;
    seq.coords = read_shrec_coordinates(shrec_sequence_path(root, row), graph.joints,
                                        static_cast<std::size_t>(row.frames));
    center_on_root(seq.coords, graph.root);
    seq.label14 = row.label14 - 1;
    seq.label28 = row.label28 - 1;
    seq.subject = row.subject;
    seq.trial = row.trial;
    out.push_back(std::move(seq));
  }
  return out;
}

ShrecSplit load_shrec(const std::filesystem::path& root) {
  return {parse_shrec(root, "train_gestures.txt"), parse_shrec(root, "test_gestures.txt")};
}

}  // namespace dstsa::data
