#include <doctest.h>

#include <cmath>
#include <set>

#include "qin/model.hpp"
#include "test_util.hpp"

using namespace qin;
using namespace qin::testing;

namespace {

HyperParams small_hp() {
  HyperParams hp;
  hp.vocab = 10;
  hp.frozen_dim = 4;
  hp.d_t = hp.d_a = hp.d_b = 8;
  hp.qnn_dim = 16;
  hp.seq_len = 5;
  return hp;
}

}  // namespace

TEST_CASE("init_params is seed-deterministic") {
  const auto hp = small_hp();
  Rng a(3), b(3), c(4);
  const auto pa = init_params(hp, a);
  CHECK(pa == init_params(hp, b));
  CHECK_FALSE(pa == init_params(hp, c));
}

TEST_CASE("init_params shapes and fixed values") {
  const auto hp = small_hp();
  Rng rng(1);
  const auto p = init_params(hp, rng);
  CHECK(p.id_embedding.rows() == 10);
  CHECK(p.id_embedding.cols() == 4);
  CHECK(p.w_q.rows() == 8);
  CHECK(p.w_k.cols() == 8);
  REQUIRE(p.qnn.size() == 2);
  CHECK(p.qnn[0].w.dim0() == 2);
  CHECK(p.qnn[0].w.dim1() == 16);
  CHECK(p.qnn[0].prelu_slope == 0.25);
  CHECK(p.head_w.size() == 16);
  CHECK(p.head_b == 0.0);
}

TEST_CASE("projection weights have std sqrt(1/fan_in)") {
  HyperParams hp = small_hp();
  hp.d_t = hp.d_a = hp.d_b = 100;
  hp.frozen_dim = 50;
  hp.qnn_dim = 200;
  hp.qnn_layers = 0;
  Rng rng(11);
  const auto p = init_params(hp, rng);
  double ss = 0.0;
  for (double v : p.w_q.flat()) ss += v * v;
  const double sd = std::sqrt(ss / static_cast<double>(p.w_q.size()));
  CHECK(std::abs(sd - 0.1) < 0.015);

  double es = 0.0;
  for (double v : p.id_embedding.flat()) es += v * v;
  CHECK(std::sqrt(es / static_cast<double>(p.id_embedding.size())) < 0.02);
}

TEST_CASE("validate rejects inconsistent dims") {
  auto hp = small_hp();
  CHECK_NOTHROW(hp.validate());
  hp.d_a = 4;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = small_hp();
  hp.qnn_dim = 15;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = small_hp();
  hp.dropout_p = 1.0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = small_hp();
  hp.d_t = 0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
}

TEST_CASE("every parameter tensor has exactly one gradient slot") {
  for (auto inter : {Interaction::qnn, Interaction::mlp}) {
    auto hp = small_hp();
    hp.interaction = inter;
    Rng rng(2);
    auto p = init_params(hp, rng);
    auto g = zeros_like(p);
    const auto pv = param_views(p);
    const auto gv = param_views(g);
    REQUIRE(pv.size() == gv.size());
    std::set<std::string> names;
    std::size_t total = 0;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      CHECK(pv[i].name == gv[i].name);
      CHECK(pv[i].shape == gv[i].shape);
      CHECK(pv[i].data.size() == gv[i].data.size());
      CHECK(pv[i].data.data() != gv[i].data.data());
      CHECK(names.insert(pv[i].name).second);
      total += pv[i].data.size();
    }
    CHECK(total == param_count(p));
    for (double v : g.head_w) CHECK(v == 0.0);
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const auto dir = temp_dir("ckpt");
  const auto hp = small_hp();
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(100 + s);
    auto p = init_params(hp, rng);
    for (auto& v : param_views(p)) fill_normal(v.data, rng);
    p.head_b = rng.normal();
    save_checkpoint(p, dir / "a.ckpt");
    CHECK(load_checkpoint(dir / "a.ckpt", hp) == p);
  }
  CHECK(slurp(dir / "a.ckpt").substr(0, 8) == "QINCKPT1");
}

TEST_CASE("checkpoint errors are distinct") {
  const auto dir = temp_dir("ckpt_err");
  auto hp = small_hp();
  hp.qnn_layers = 4;
  Rng rng(1);
  save_checkpoint(init_params(hp, rng), dir / "l4.ckpt");

  auto hp2 = hp;
  hp2.qnn_layers = 2;
  CHECK_THROWS_AS(load_checkpoint(dir / "l4.ckpt", hp2), ShapeMismatchError);

  auto bytes = slurp(dir / "l4.ckpt");
  spit(dir / "magic.ckpt", "XXXX" + bytes.substr(4));
  CHECK_THROWS_AS(load_checkpoint(dir / "magic.ckpt", hp), BadMagicError);

  spit(dir / "short.ckpt", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt", hp), TruncatedFileError);

  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt", hp), IoError);
}
