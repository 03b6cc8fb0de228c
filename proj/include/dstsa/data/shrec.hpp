#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dstsa/data/skeleton.hpp"

namespace dstsa::data {

// One line of a SHREC'17 index file, as written (1-based labels).
struct ShrecIndexRow {
  int gesture = 0;
  int finger = 0;
  int subject = 0;
  int trial = 0;
  int label14 = 0;
  int label28 = 0;
  int frames = 0;
};

// Throws FormatError naming the 1-based line for rows that do not hold
// exactly seven integers. Blank lines are skipped.
std::vector<ShrecIndexRow> read_shrec_index(const std::filesystem::path& file);

// gesture_<g>/finger_<f>/subject_<s>/essai_<e>/skeletons_world.txt
std::filesystem::path shrec_sequence_path(const std::filesystem::path& root,
                                          const ShrecIndexRow& row);

// One frame per line, 3 * joints floats (x, y, z per joint). FormatError on
// arity or unparsable tokens; IntegrityError on a frame-count mismatch or a
// non-finite value.
Tensor<double> read_shrec_coordinates(const std::filesystem::path& file, std::size_t joints,
                                      std::size_t expected_frames);

// Parses every sequence listed in `index_file` (relative to `root`), with
// 0-based labels, centred on the wrist of the first frame.
std::vector<SkeletonSequence> parse_shrec(const std::filesystem::path& root,
                                          const std::string& index_file);

struct ShrecSplit {
  std::vector<SkeletonSequence> train;
  std::vector<SkeletonSequence> test;
};

// train_gestures.txt / test_gestures.txt under `root`.
ShrecSplit load_shrec(const std::filesystem::path& root);

}  // namespace dstsa::data
