#include <doctest.h>

#include "unirep/config.hpp"
#include "unirep/error.hpp"

using namespace unirep;

namespace {

const char* kMinimal = R"(
[domain.1]
classes = 4
n_per_class = 20
image_size = 8
)";

}  // namespace

TEST_CASE("minimal config fills the documented defaults") {
  const ExperimentConfig cfg = parse_config(kMinimal);
  CHECK(cfg.batch_size == 32);
  CHECK(cfg.momentum == doctest::Approx(0.9));
  CHECK(cfg.weight_decay == doctest::Approx(1e-4));
  CHECK(cfg.preset == "desk8");
  CHECK(cfg.sharing_mode == SharingMode::DeepSharing);
  CHECK(cfg.norm.kind == NormKind::BN);
  CHECK(cfg.norm.scale_scope == ParamScope::Domain);
  CHECK(cfg.norm.moment_scope == MomentScope::Domain);
  CHECK(cfg.warmup_lr == doctest::Approx(0.01));
  CHECK(cfg.base_lr == doctest::Approx(0.1));
  CHECK(cfg.final_lr == doctest::Approx(1e-4));
  CHECK(cfg.domains.size() == 1);
  CHECK(cfg.domains[0].synth.classes == 4);
}

TEST_CASE("IN with domain moments violates the strategy invariant") {
  const std::string text = std::string(kMinimal) + R"(
[normalization]
kind = in
moment_scope = domain
)";
  CHECK_THROWS_AS(parse_config(text), ConfigError);
}

TEST_CASE("IN without explicit moment scope defaults to none") {
  const std::string text = std::string(kMinimal) + R"(
[normalization]
kind = in
scale_scope = universal
)";
  const ExperimentConfig cfg = parse_config(text);
  CHECK(cfg.norm.moment_scope == MomentScope::None);
}

TEST_CASE("full sharing with unequal class counts is a class-count error") {
  const std::string text = R"(
[network]
sharing = full

[domain.1]
classes = 10

[domain.2]
classes = 5
)";
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("equal class counts") != std::string::npos);
  }
}

TEST_CASE("unknown keys are named and all violations aggregate") {
  const std::string text = R"(
[experiment]
nmae = typo

[optimizer]
batch_size = 0

[domain.1]
classes = 1
)";
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("unknown key 'nmae'") != std::string::npos);
    CHECK(msg.find("batch_size") != std::string::npos);
    CHECK(msg.find("classes") != std::string::npos);
    CHECK(e.violations().size() >= 3);
  }
}

TEST_CASE("resolved text reparses to the same canonical form") {
  const std::string text = std::string(kMinimal) + R"(
[network]
preset = desk8
sharing = partial
partial_blocks = 1-2

[normalization]
kind = bn
scale_scope = universal
moment_scope = domain

[schedule]
total_steps = 400
)";
  const ExperimentConfig cfg = parse_config(text);
  const std::string resolved = cfg.resolved_text();
  const ExperimentConfig reparsed = parse_config(resolved);
  CHECK(reparsed.resolved_text() == resolved);
  CHECK(reparsed.hash() == cfg.hash());
}

TEST_CASE("config hash distinguishes different configs") {
  const ExperimentConfig a = parse_config(kMinimal);
  ExperimentConfig b = a;
  b.seed_model = 99;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("schedule construction from fractions") {
  const std::string text = std::string(kMinimal) + R"(
[schedule]
total_steps = 1000
warmup_fraction = 0.1
decay_boundaries = 0.5,0.9
)";
  const ExperimentConfig cfg = parse_config(text);
  const Schedule s = cfg.schedule();
  CHECK(s.warmup_steps == 100);
  REQUIRE(s.boundaries.size() == 2);
  CHECK(s.boundaries[0] == 500);
  CHECK(s.boundaries[1] == 900);
}

TEST_CASE("build_model and build_datasets materialize a runnable setup") {
  const std::string text = R"(
[network]
preset = desk8
sharing = deep

[schedule]
total_steps = 40

[domain.1]
classes = 3
n_per_class = 10
image_size = 8
margin = 2.0

[domain.2]
classes = 4
n_per_class = 10
image_size = 8
margin = 2.0
seed = 2
)";
  const ExperimentConfig cfg = parse_config(text);
  const Model model = build_model(cfg);
  CHECK(model.num_domains() == 2);
  CHECK(model.blueprint.class_counts[0] == 3);
  CHECK(model.blueprint.class_counts[1] == 4);
  const std::vector<Dataset> datasets = build_datasets(cfg);
  REQUIRE(datasets.size() == 2);
  CHECK(datasets[0].descriptor.id == 1);
  CHECK_FALSE(datasets[0].split.empty());
  CHECK_FALSE(datasets[0].descriptor.whiten_std.empty());
}
