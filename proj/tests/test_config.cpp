#include "ecc/config.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ecc;

namespace {

ConfigError parse_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "expected ConfigError for:\n" << text;
    return ConfigError("none");
}

}  // namespace

TEST(Config, EmptyFileYieldsPublishedDefaults) {
    test::TempDir dir;
    test::write_file(dir / "empty.conf", "");
    const EccConfig cfg = load_config(dir / "empty.conf");
    EXPECT_EQ(cfg.eval.alpha, 0.8);
    EXPECT_EQ(cfg.eval.theta, 0.2);
    EXPECT_EQ(cfg.eval.tau, 0.5);
    EXPECT_EQ(cfg.eval.eval_sampling_rate, 1.0);
    EXPECT_EQ(cfg.generation.max_length, 8192);
    EXPECT_EQ(cfg.generation.top_p, 0.8);
    EXPECT_EQ(cfg.generation.temperature, 0.6);
    EXPECT_EQ(cfg.generation.max_input_length, 256);
    EXPECT_EQ(cfg.generation.max_output_length, 512);
    EXPECT_EQ(cfg.training.method, TuningMethod::lora);
    EXPECT_EQ(cfg.training.fine_tuning_steps, 30000);
    EXPECT_EQ(cfg.training.learning_rate, 5e-5);
    EXPECT_EQ(cfg.training.per_device_batch_size, 1);
    EXPECT_EQ(cfg.training.lora_rank, 8);
    EXPECT_EQ(cfg.training.lora_alpha, 32);
    EXPECT_EQ(cfg.training.lora_dropout, 0.1);
    EXPECT_FALSE(cfg.training.num_virtual_tokens.has_value());
    EXPECT_EQ(cfg.prompt_n, 500);
}

TEST(Config, PrefixMethodsGetVirtualTokenDefault) {
    for (const char* m : {"prefix_tuning", "p_tuning_v2"}) {
        const EccConfig cfg = parse_config(std::string("training.method = ") + m);
        EXPECT_EQ(cfg.training.num_virtual_tokens, 128);
        EXPECT_FALSE(cfg.training.lora_rank);
        EXPECT_FALSE(cfg.training.lora_alpha);
        EXPECT_FALSE(cfg.training.lora_dropout);
        EXPECT_EQ(cfg.training.fine_tuning_steps, 30000);
    }
    const EccConfig none = parse_config("training.method = none");
    EXPECT_FALSE(none.training.num_virtual_tokens);
    EXPECT_FALSE(none.training.lora_rank);
}

TEST(Config, MethodSpecificFieldRejectedForOtherMethod) {
    auto e = parse_error("training.num_virtual_tokens = 64\n");
    EXPECT_EQ(e.key(), "training.num_virtual_tokens");
    EXPECT_EQ(e.line(), 1u);
    e = parse_error("training.method = prefix_tuning\ntraining.lora_rank = 4\n");
    EXPECT_EQ(e.key(), "training.lora_rank");
    EXPECT_EQ(e.line(), 2u);
}

TEST(Config, ValuesOverrideDefaults) {
    const EccConfig cfg = parse_config(R"(
# comment
eval.alpha = 0.7   # trailing comment
eval.theta = 0.25
prompt.preamble = "line one\nline \"two\""
gateway.escalation = async
queue.auto_flush = true
seed = 99
)");
    EXPECT_EQ(cfg.eval.alpha, 0.7);
    EXPECT_EQ(cfg.eval.theta, 0.25);
    EXPECT_EQ(*cfg.prompt_preamble, "line one\nline \"two\"");
    EXPECT_EQ(cfg.escalation_mode, EscalationMode::asynchronous);
    EXPECT_TRUE(cfg.queue_auto_flush);
    EXPECT_EQ(cfg.seed, 99u);
}

TEST(Config, OutOfRangeNamesTheField) {
    auto e = parse_error("eval.alpha = 1.5\n");
    EXPECT_EQ(e.key(), "eval.alpha");
    EXPECT_NE(std::string(e.what()).find("eval.alpha"), std::string::npos);
    EXPECT_EQ(parse_error("\n\neval.theta = -0.1").line(), 3u);
    EXPECT_EQ(parse_error("eval.tau = 2").key(), "eval.tau");
    EXPECT_EQ(parse_error("eval.sampling_rate = 1.01").key(), "eval.sampling_rate");
    EXPECT_EQ(parse_error("generation.top_p = 0").key(), "generation.top_p");
    EXPECT_EQ(parse_error("training.lora_dropout = 1").key(), "training.lora_dropout");
    EXPECT_EQ(parse_error("queue.batch_size = 0").key(), "queue.batch_size");
    EXPECT_EQ(parse_error("prompt.n = -1").key(), "prompt.n");
}

TEST(Config, SyntaxErrorsCarryLineNumbers) {
    EXPECT_EQ(parse_error("eval.alpha = 0.5\nnot a pair\n").line(), 2u);
    EXPECT_EQ(parse_error("eval.alpha = abc").key(), "eval.alpha");
    EXPECT_EQ(parse_error("eval.alpha = 0.5\neval.alpha = 0.6").line(), 2u);
    EXPECT_EQ(parse_error("bogus.key = 1").key(), "bogus.key");
    EXPECT_EQ(parse_error("prompt.preamble = \"open").key(), "prompt.preamble");
    EXPECT_EQ(parse_error("queue.auto_flush = yes").key(), "queue.auto_flush");
    EXPECT_EQ(parse_error("gateway.escalation = later").key(), "gateway.escalation");
}

TEST(Config, BackendKindsRequireTheirFields) {
    EXPECT_EQ(parse_error("end.kind = http_chat").key(), "end.endpoint");
    EXPECT_EQ(parse_error("cloud.kind = replay").key(), "cloud.fixture");
    EXPECT_EQ(parse_error("end.kind = http_chat\nend.endpoint = ftp://x").key(), "end.endpoint");
    EXPECT_EQ(parse_error("end.fixture = a.jsonl").key(), "end.fixture");
    EXPECT_EQ(parse_error("end.timeout_ms = 0").key(), "end.timeout_ms");
    EXPECT_EQ(parse_error("cloud.max_retries = -1").key(), "cloud.max_retries");
    const EccConfig cfg = parse_config(
        "end.kind = http_chat\nend.endpoint = http://127.0.0.1:9/v1/chat/completions\nend.model = m\n");
    EXPECT_EQ(cfg.end_backend.kind, BackendKind::http_chat);
    EXPECT_EQ(cfg.end_backend.timeout_ms, 30000);
    EXPECT_EQ(cfg.end_backend.max_retries, 2);
}

TEST(Config, EndAndCloudMustDiffer) {
    const std::string same =
        "end.kind = template\nend.model = m\nend.template = t\ncloud.kind = template\ncloud.model = m\n"
        "cloud.template = t\n";
    EXPECT_EQ(parse_error(same).key(), "cloud.model");
}

TEST(Config, LoadRebasesRelativePaths) {
    test::TempDir dir;
    std::filesystem::create_directories(dir / "sub");
    test::write_file(dir / "sub" / "a.conf",
                     "end.kind = replay\nend.fixture = end.jsonl\nlog.path = logs/events.jsonl\n"
                     "queue.path = /abs/queue.jsonl\n");
    const EccConfig cfg = load_config(dir / "sub" / "a.conf");
    EXPECT_EQ(*cfg.end_backend.fixture_path, (dir / "sub" / "end.jsonl").string());
    EXPECT_EQ(cfg.log_path, (dir / "sub" / "logs" / "events.jsonl").string());
    EXPECT_EQ(cfg.queue_path, "/abs/queue.jsonl");
    EXPECT_THROW(load_config(dir / "missing.conf"), ConfigError);
}

TEST(Config, ResolvePathPrefersExplicitThenEnvironment) {
    ::unsetenv("ECC_CONFIG");
    EXPECT_FALSE(resolve_config_path(std::nullopt));
    ::setenv("ECC_CONFIG", "/from/env.conf", 1);
    EXPECT_EQ(*resolve_config_path(std::nullopt), "/from/env.conf");
    EXPECT_EQ(*resolve_config_path(std::filesystem::path("/explicit.conf")), "/explicit.conf");
    ::unsetenv("ECC_CONFIG");
}

TEST(Config, DefaultsValidate) { EXPECT_TRUE(validate_config(EccConfig{}).empty()); }

TEST(Config, SerializeRoundTripsRandomConfigs) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> small(1, 100000);
    const TuningMethod methods[] = {TuningMethod::prefix_tuning, TuningMethod::p_tuning_v2, TuningMethod::lora,
                                    TuningMethod::none};
    for (int i = 0; i < 300; ++i) {
        EccConfig c;
        c.eval = {unit(rng), unit(rng), unit(rng), unit(rng)};
        c.generation.max_length = small(rng);
        c.generation.top_p = 1.0 - unit(rng) * 0.99;
        c.generation.temperature = unit(rng) * 2;
        c.training = TrainingJobSpec::defaults_for(methods[i % 4]);
        c.training.learning_rate = unit(rng) * 1e-3 + 1e-9;
        if (c.training.num_virtual_tokens) c.training.num_virtual_tokens = small(rng);
        if (c.training.lora_dropout) c.training.lora_dropout = unit(rng) * 0.9;
        if (i % 3 == 0) {
            c.end_backend.kind = BackendKind::http_chat;
            c.end_backend.template_text.reset();
            c.end_backend.endpoint = "https://example.test/v1/chat/completions";
            c.end_backend.api_key_env = "KEY_" + std::to_string(i);
        }
        if (i % 5 == 0) {
            c.cloud_backend.kind = BackendKind::replay;
            c.cloud_backend.template_text.reset();
            c.cloud_backend.fixture_path = "fixtures/cloud \"q\".jsonl";
        }
        if (i % 2) c.prompt_preamble = "pre\tamble\n#" + std::to_string(i) + "\\";
        c.prompt_n = small(rng);
        c.queue_batch_size = small(rng);
        c.queue_auto_flush = i % 2;
        c.escalation_mode = i % 4 ? EscalationMode::synchronous : EscalationMode::asynchronous;
        c.trainer = i % 3 ? TrainerKind::file_sink : TrainerKind::noop;
        c.seed = rng() >> 1;
        ASSERT_TRUE(validate_config(c).empty()) << i;
        const std::string text = serialize_config(c);
        ASSERT_EQ(parse_config(text), c) << text;
    }
}
