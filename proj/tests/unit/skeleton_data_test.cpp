#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "dstsa/data/batch.hpp"
#include "dstsa/data/shrec.hpp"
#include "dstsa/data/synthetic.hpp"
#include "dstsa/errors.hpp"

using namespace dstsa;
using namespace dstsa::data;
namespace fs = std::filesystem;

namespace {

Tensor<double> random_coords(std::size_t frames, std::size_t joints, std::uint64_t seed) {
  Rng rng(seed);
  return Tensor<double>::uniform(Shape{3, frames, joints}, -1.0, 1.0, rng);
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("dstsa_data_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_text(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path());
  std::ofstream(file) << text;
}

std::string frame_line(std::size_t values, double base) {
  std::string line;
  for (std::size_t i = 0; i < values; ++i) {
    line += std::to_string(base + 0.001 * static_cast<double>(i));
    line += i + 1 < values ? ' ' : '\n';
  }
  return line;
}

}  // namespace

TEST(Graph, Hand22IsATreeRootedAtTheWrist) {
  const GraphSpec g = hand22();
  EXPECT_EQ(g.joints, 22u);
  EXPECT_EQ(g.root, 0u);
  EXPECT_EQ(g.edges.size(), 21u);
  EXPECT_EQ(g.parent[1], 0);
  EXPECT_EQ(g.parent[2], 0);
  EXPECT_EQ(g.parent[6], 1);
  EXPECT_EQ(g.parent[21], 20);
  EXPECT_EQ(g.hops[5][0], 4);
  EXPECT_EQ(g.hops[9][21], 8);
}

TEST(Graph, HopTableIsAMetric) {
  for (const GraphSpec& g : {hand22(), ntu25(), chain_graph(6)}) {
    for (std::size_t i = 0; i < g.joints; ++i) {
      EXPECT_EQ(g.hops[i][i], 0);
      for (std::size_t j = 0; j < g.joints; ++j) {
        EXPECT_EQ(g.hops[i][j], g.hops[j][i]);
        if (i != j) {
          EXPECT_GT(g.hops[i][j], 0);
        }
        for (std::size_t k = 0; k < g.joints; ++k) {
          EXPECT_LE(g.hops[i][k], g.hops[i][j] + g.hops[j][k]);
        }
      }
    }
  }
}

TEST(Graph, RejectsNonTrees) {
  EXPECT_THROW(make_graph("bad", 3, 0, {{1, 0}}), ConfigError);
  EXPECT_THROW(make_graph("cycle", 3, 0, {{1, 2}, {2, 1}}), ConfigError);
  EXPECT_THROW(make_graph("rootchild", 3, 0, {{0, 1}, {2, 1}}), ConfigError);
  EXPECT_THROW(graph_by_name("hand21"), ConfigError);
  EXPECT_EQ(graph_by_name("chain5").joints, 5u);
}

TEST(Modalities, BoneIsChildMinusParent) {
  const GraphSpec g = chain_graph(3);
  Tensor<double> x(Shape{3, 1, 3});
  // joint 1 at (1,2,3), its parent joint 0 at the origin; joint 2 coincides with joint 1.
  for (std::size_t c = 0; c < 3; ++c) {
    x.at({c, 0, 0}) = 0.0;
    x.at({c, 0, 1}) = static_cast<double>(c + 1);
    x.at({c, 0, 2}) = static_cast<double>(c + 1);
  }
  const auto bone = derive_bone(x, g);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(bone.at({c, 0, 1}), static_cast<double>(c + 1));
    EXPECT_EQ(bone.at({c, 0, 2}), 0.0);
  }
  Tensor<double> moved = x;
  for (std::size_t c = 0; c < 3; ++c) moved.at({c, 0, 0}) = 5.0;
  EXPECT_EQ(derive_bone(moved, g).at({1, 0, 0}), 0.0);
}

TEST(Modalities, BonePrefixSumReconstructsJoints) {
  const GraphSpec g = hand22();
  Tensor<double> x = random_coords(4, 22, 1);
  center_on_root(x, g.root);
  const auto bone = derive_bone(x, g);
  // Root is anchored at its centred position; children accumulate bones in BFS order.
  Tensor<double> rebuilt(x.shape());
  const auto adj = g.neighbours();
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t t = 0; t < 4; ++t) {
      rebuilt.at({c, t, g.root}) = x.at({c, t, g.root});
      std::vector<std::size_t> order{g.root};
      std::vector<bool> seen(22, false);
      seen[g.root] = true;
      for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t w : adj[order[i]])
          if (!seen[w]) {
            seen[w] = true;
            order.push_back(w);
            rebuilt.at({c, t, w}) = rebuilt.at({c, t, order[i]}) + bone.at({c, t, w});
          }
    }
  EXPECT_LT(max_abs_diff(rebuilt, x), 1e-12);
}

TEST(Modalities, MotionConventions) {
  Tensor<double> still(Shape{3, 5, 2}, 0.7);
  const auto zero = derive_motion(still);
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);

  Tensor<double> linear(Shape{3, 5, 2});
  const double u[3] = {0.5, -1.0, 2.0};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t v = 0; v < 2; ++v) linear.at({c, t, v}) = static_cast<double>(t) * u[c];
  const auto m = derive_motion(linear);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t v = 0; v < 2; ++v) {
      EXPECT_EQ(m.at({c, 0, v}), 0.0);
      for (std::size_t t = 1; t < 5; ++t) EXPECT_DOUBLE_EQ(m.at({c, t, v}), u[c]);
    }
  EXPECT_THROW(derive_motion(Tensor<double>(Shape{3, 1, 2})), InputError);
}

TEST(Modalities, CumulativeSumOfMotionRecoversFrames) {
  const Tensor<double> x = random_coords(6, 4, 2);
  const auto m = derive_motion(x);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t v = 0; v < 4; ++v) {
      double acc = x.at({c, 0, v});
      for (std::size_t t = 1; t < 6; ++t) {
        acc += m.at({c, t, v});
        EXPECT_NEAR(acc, x.at({c, t, v}), 1e-12);
      }
    }
}

TEST(Modalities, NamesRoundTrip) {
  for (Modality m : all_modalities()) EXPECT_EQ(parse_modality(modality_name(m)), m);
  EXPECT_THROW(parse_modality("velocity"), ConfigError);
}

TEST(Sampling, UniformMatchesRoundedLinspace) {
  EXPECT_EQ(sample_indices(3, 6, SamplingMode::Uniform, 0),
            (std::vector<std::size_t>{0, 0, 1, 1, 2, 2}));
  std::vector<std::size_t> identity(150);
  std::iota(identity.begin(), identity.end(), 0);
  EXPECT_EQ(sample_indices(150, 150, SamplingMode::Uniform, 0), identity);
  EXPECT_EQ(sample_indices(10, 1, SamplingMode::Uniform, 0), std::vector<std::size_t>{0});
  // Oracle: round(linspace(0, 88, 150)) with ties to even.
  const auto idx = sample_indices(89, 150, SamplingMode::Uniform, 0);
  for (std::size_t i = 0; i < 150; ++i) {
    EXPECT_EQ(idx[i], static_cast<std::size_t>(std::nearbyint(88.0 * i / 149.0)));
  }
}

TEST(Sampling, UniformIsIdempotentAtNativeLength) {
  SkeletonSequence seq{random_coords(12, 3, 3)};
  const auto same = sample_frames(seq, 12, SamplingMode::Uniform, 0);
  EXPECT_EQ(same.coords, seq.coords);
}

TEST(Sampling, RandomIsSeededSortedAndBinned) {
  const auto a = sample_indices(40, 150, SamplingMode::Random, 5);
  EXPECT_EQ(a, sample_indices(40, 150, SamplingMode::Random, 5));
  EXPECT_NE(a, sample_indices(40, 150, SamplingMode::Random, 6));
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_GE(static_cast<double>(a[i]) + 1.0, 40.0 * i / 150.0);
    EXPECT_LE(static_cast<double>(a[i]), 40.0 * (i + 1) / 150.0);
  }
  const auto down = sample_indices(300, 30, SamplingMode::Random, 9);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_GE(down[i], 10 * i);
    EXPECT_LT(down[i], 10 * (i + 1));
  }
}

TEST(Shrec, IndexRowsAreZeroBased) {
  TempDir dir;
  write_text(dir.path() / "train_gestures.txt", "1 1 1 1 1 1 3\n");
  write_text(dir.path() / "gesture_1/finger_1/subject_1/essai_1/skeletons_world.txt",
             frame_line(66, 0.1) + frame_line(66, 0.2) + frame_line(66, 0.3));
  const auto seqs = parse_shrec(dir.path(), "train_gestures.txt");
  ASSERT_EQ(seqs.size(), 1u);
  EXPECT_EQ(seqs[0].label14, 0);
  EXPECT_EQ(seqs[0].label28, 0);
  EXPECT_EQ(seqs[0].frames(), 3u);
  EXPECT_EQ(seqs[0].joints(), 22u);
  // Centred on the frame-0 wrist: joint 1 y is token 4 (0.004) minus wrist y (0.001).
  EXPECT_DOUBLE_EQ(seqs[0].coords.at({0, 0, 0}), 0.0);
  EXPECT_NEAR(seqs[0].coords.at({1, 0, 1}), 0.003, 1e-12);
  EXPECT_NEAR(seqs[0].coords.at({0, 2, 0}), 0.2, 1e-12);

  const auto rows = read_shrec_index(dir.path() / "train_gestures.txt");
  EXPECT_EQ(rows[0].frames, 3);
}

TEST(Shrec, IndexArityErrorNamesLine) {
  TempDir dir;
  write_text(dir.path() / "idx.txt", "1 1 1 1 1 1 89\n\n2 1 1 1 2 2\n");
  try {
    read_shrec_index(dir.path() / "idx.txt");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Shrec, CoordinateErrors) {
  TempDir dir;
  const fs::path file = dir.path() / "seq.txt";
  write_text(file, frame_line(65, 0.0));
  EXPECT_THROW(read_shrec_coordinates(file, 22, 1), FormatError);
  write_text(file, frame_line(66, 0.0) + frame_line(66, 0.0));
  EXPECT_THROW(read_shrec_coordinates(file, 22, 3), IntegrityError);
  std::string bad = frame_line(66, 0.0);
  bad.replace(0, bad.find(' '), "nan");
  write_text(file, bad);
  EXPECT_THROW(read_shrec_coordinates(file, 22, 1), IntegrityError);
  write_text(file, frame_line(66, 0.0));
  const auto one = read_shrec_coordinates(file, 22, 1);
  EXPECT_EQ(one.shape(), (Shape{3, 1, 22}));
  EXPECT_NEAR(one.at({2, 0, 21}), 0.001 * 65, 1e-12);
}

TEST(Synthetic, HistogramAndDeterminism) {
  const SyntheticSpec spec{4, 16, 22, 30, 7};
  const auto a = generate_synthetic(spec);
  ASSERT_EQ(a.size(), 64u);
  std::vector<int> hist(4, 0);
  for (const auto& s : a) {
    ++hist[static_cast<std::size_t>(s.label14)];
    EXPECT_EQ(s.coords.shape(), (Shape{3, 30, 22}));
    EXPECT_TRUE(s.coords.all_finite());
  }
  EXPECT_EQ(hist, (std::vector<int>{16, 16, 16, 16}));
  const auto b = generate_synthetic(spec);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].coords, b[i].coords);
  EXPECT_THROW(generate_synthetic({1, 4, 22, 30, 7}), InputError);
}

TEST(Synthetic, ClassesDifferFrameByFrame) {
  const auto seqs = generate_synthetic({4, 8, 22, 30, 11});
  // Per-class mean trajectory, then mean per-frame L2 distance between classes.
  auto class_mean = [&](int label) {
    Tensor<double> m(Shape{3, 30, 22});
    int n = 0;
    for (const auto& s : seqs)
      if (s.label14 == label) {
        for (std::size_t i = 0; i < m.numel(); ++i) m[i] += std::abs(derive_motion(s.coords)[i]);
        ++n;
      }
    for (auto& v : m.values()) v /= n;
    return m;
  };
  const auto m0 = class_mean(0);
  const auto m1 = class_mean(1);
  double dist = 0.0;
  for (std::size_t t = 0; t < 30; ++t) {
    double sq = 0.0;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t v = 0; v < 22; ++v) sq += std::pow(m0.at({c, t, v}) - m1.at({c, t, v}), 2);
    dist += std::sqrt(sq);
  }
  EXPECT_GT(dist / 30.0, 0.0);
}

TEST(Synthetic, ContainerRoundTrip) {
  TempDir dir;
  const auto seqs = generate_synthetic({3, 2, 22, 10, 1});
  save_sequences(dir.path() / "set.bin", seqs);
  const auto back = load_sequences(dir.path() / "set.bin");
  ASSERT_EQ(back.size(), seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    EXPECT_EQ(back[i].coords, seqs[i].coords);
    EXPECT_EQ(back[i].label14, seqs[i].label14);
  }
  write_text(dir.path() / "junk.bin", "not a container");
  EXPECT_THROW(load_sequences(dir.path() / "junk.bin"), FormatError);
}

TEST(Batch, StacksModalitiesAndLabels) {
  const GraphSpec g = hand22();
  const auto seqs = generate_synthetic({2, 2, 22, 20, 3});
  const std::vector<std::size_t> order{3, 0};
  const auto batch =
      make_batch(seqs, order, g, {Modality::BoneMotion, 20, SamplingMode::Uniform, 0, 14});
  EXPECT_EQ(batch.x.shape(), (Shape{2, 3, 20, 22}));
  EXPECT_EQ(batch.labels, (std::vector<int>{1, 0}));
  const auto expected = derive_motion(derive_bone(seqs[3].coords, g));
  for (std::size_t i = 0; i < expected.numel(); ++i) {
    EXPECT_FLOAT_EQ(batch.x[i], static_cast<float>(expected[i]));
  }
}
