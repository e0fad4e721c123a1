#include "ecc/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ecc {

std::string to_string(TuningMethod method) {
    switch (method) {
        case TuningMethod::prefix_tuning: return "prefix_tuning";
        case TuningMethod::p_tuning_v2: return "p_tuning_v2";
        case TuningMethod::lora: return "lora";
        case TuningMethod::none: return "none";
    }
    return "none";
}

std::optional<TuningMethod> parse_tuning_method(std::string_view text) {
    if (text == "prefix_tuning") return TuningMethod::prefix_tuning;
    if (text == "p_tuning_v2") return TuningMethod::p_tuning_v2;
    if (text == "lora") return TuningMethod::lora;
    if (text == "none") return TuningMethod::none;
    return std::nullopt;
}

std::string to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::http_chat: return "http_chat";
        case BackendKind::replay: return "replay";
        case BackendKind::template_text: return "template";
    }
    return "template";
}

std::optional<BackendKind> parse_backend_kind(std::string_view text) {
    if (text == "http_chat") return BackendKind::http_chat;
    if (text == "replay") return BackendKind::replay;
    if (text == "template") return BackendKind::template_text;
    return std::nullopt;
}

TrainingJobSpec TrainingJobSpec::defaults_for(TuningMethod method) {
    TrainingJobSpec spec;
    spec.method = method;
    spec.num_virtual_tokens.reset();
    spec.lora_rank.reset();
    spec.lora_alpha.reset();
    spec.lora_dropout.reset();
    switch (method) {
        case TuningMethod::prefix_tuning:
        case TuningMethod::p_tuning_v2:
            spec.num_virtual_tokens = kDefaultVirtualTokens;
            break;
        case TuningMethod::lora:
            spec.lora_rank = kDefaultLoraRank;
            spec.lora_alpha = kDefaultLoraAlpha;
            spec.lora_dropout = kDefaultLoraDropout;
            break;
        case TuningMethod::none:
            break;
    }
    return spec;
}

namespace {

BackendConfig template_backend(std::string model, std::string text) {
    BackendConfig b;
    b.kind = BackendKind::template_text;
    b.model_name = std::move(model);
    b.template_text = std::move(text);
    return b;
}

void reset_for_kind(BackendConfig& b, BackendKind kind) {
    b.kind = kind;
    b.endpoint.reset();
    b.fixture_path.reset();
    b.template_text.reset();
    if (kind == BackendKind::template_text) b.template_text = "";
}

}  // namespace

EccConfig::EccConfig()
    : end_backend(template_backend("chatglm3-6b", "Dear customer, how can I help you with \"{query}\"?")),
      cloud_backend(template_backend("gemini-1.5-pro", "Sir, thank you for asking about \"{query}\".")) {}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct RawValue {
    std::string text;
    bool quoted = false;
    std::size_t line = 0;
};

RawValue parse_value(std::string_view raw, std::size_t line, const std::string& key) {
    std::string v = trim(raw);
    if (v.empty() || v.front() != '"') {
        // Unquoted values may carry a trailing comment.
        if (auto hash = v.find('#'); hash != std::string::npos) v = trim(std::string_view(v).substr(0, hash));
        return {v, false, line};
    }
    std::string out;
    std::size_t i = 1;
    for (; i < v.size(); ++i) {
        char c = v[i];
        if (c == '\\') {
            if (i + 1 >= v.size()) break;
            char e = v[++i];
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default:
                    throw ConfigError("line " + std::to_string(line) + ": unknown escape '\\" + e + "' in " + key,
                                      line, key);
            }
        } else if (c == '"') {
            break;
        } else {
            out.push_back(c);
        }
    }
    if (i >= v.size()) {
        throw ConfigError("line " + std::to_string(line) + ": unterminated string for " + key, line, key);
    }
    std::string rest = trim(std::string_view(v).substr(i + 1));
    if (!rest.empty() && rest.front() != '#') {
        throw ConfigError("line " + std::to_string(line) + ": trailing characters after string for " + key, line,
                          key);
    }
    return {out, true, line};
}

[[noreturn]] void bad_value(const std::string& key, const RawValue& v, const std::string& expected) {
    throw ConfigError("line " + std::to_string(v.line) + ": " + key + " = '" + v.text + "' is not " + expected,
                      v.line, key);
}

double as_double(const std::string& key, const RawValue& v) {
    if (v.quoted || v.text.empty()) bad_value(key, v, "a number");
    const char* begin = v.text.c_str();
    char* end = nullptr;
    errno = 0;
    double d = std::strtod(begin, &end);
    if (end != begin + v.text.size() || errno == ERANGE) bad_value(key, v, "a number");
    return d;
}

std::int64_t as_int(const std::string& key, const RawValue& v) {
    if (v.quoted) bad_value(key, v, "an integer");
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
    if (ec != std::errc{} || ptr != v.text.data() + v.text.size()) bad_value(key, v, "an integer");
    return out;
}

int as_int32(const std::string& key, const RawValue& v) {
    std::int64_t x = as_int(key, v);
    if (x < INT32_MIN || x > INT32_MAX) bad_value(key, v, "a 32-bit integer");
    return static_cast<int>(x);
}

bool as_bool(const std::string& key, const RawValue& v) {
    if (v.text == "true") return true;
    if (v.text == "false") return false;
    bad_value(key, v, "true or false");
}

using Setter = std::function<void(EccConfig&, const std::string&, const RawValue&)>;

void add_backend_setters(std::map<std::string, Setter>& setters, const std::string& prefix,
                         BackendConfig EccConfig::*member) {
    setters[prefix + ".endpoint"] = [member](EccConfig& c, const std::string&, const RawValue& v) {
        (c.*member).endpoint = v.text;
    };
    setters[prefix + ".model"] = [member](EccConfig& c, const std::string&, const RawValue& v) {
        (c.*member).model_name = v.text;
    };
    setters[prefix + ".api_key_env"] = [member](EccConfig& c, const std::string&, const RawValue& v) {
        (c.*member).api_key_env = v.text;
    };
    setters[prefix + ".timeout_ms"] = [member](EccConfig& c, const std::string& k, const RawValue& v) {
        (c.*member).timeout_ms = as_int32(k, v);
    };
    setters[prefix + ".max_retries"] = [member](EccConfig& c, const std::string& k, const RawValue& v) {
        (c.*member).max_retries = as_int32(k, v);
    };
    setters[prefix + ".fixture"] = [member](EccConfig& c, const std::string&, const RawValue& v) {
        (c.*member).fixture_path = v.text;
    };
    setters[prefix + ".template"] = [member](EccConfig& c, const std::string&, const RawValue& v) {
        (c.*member).template_text = v.text;
    };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> s;
        s["eval.alpha"] = [](EccConfig& c, const std::string& k, const RawValue& v) { c.eval.alpha = as_double(k, v); };
        s["eval.theta"] = [](EccConfig& c, const std::string& k, const RawValue& v) { c.eval.theta = as_double(k, v); };
        s["eval.tau"] = [](EccConfig& c, const std::string& k, const RawValue& v) { c.eval.tau = as_double(k, v); };
        s["eval.sampling_rate"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.eval.eval_sampling_rate = as_double(k, v);
        };
        s["generation.max_length"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.generation.max_length = as_int32(k, v);
        };
        s["generation.top_p"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.generation.top_p = as_double(k, v);
        };
        s["generation.temperature"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.generation.temperature = as_double(k, v);
        };
        s["generation.max_input_length"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.generation.max_input_length = as_int32(k, v);
        };
        s["generation.max_output_length"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.generation.max_output_length = as_int32(k, v);
        };
        s["training.steps"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.training.fine_tuning_steps = as_int32(k, v);
        };
        s["training.learning_rate"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.training.learning_rate = as_double(k, v);
        };
        s["training.batch_size"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.training.per_device_batch_size = as_int32(k, v);
        };
        s["training.num_virtual_tokens"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.training.num_virtual_tokens = as_int32(k, v);
        };
        s["training.lora_rank"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.training.lora_rank = as_int32(k, v);
        };
        s["training.lora_alpha"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.training.lora_alpha = as_int32(k, v);
        };
        s["training.lora_dropout"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.training.lora_dropout = as_double(k, v);
        };
        add_backend_setters(s, "end", &EccConfig::end_backend);
        add_backend_setters(s, "cloud", &EccConfig::cloud_backend);
        s["prompt.n"] = [](EccConfig& c, const std::string& k, const RawValue& v) { c.prompt_n = as_int(k, v); };
        s["prompt.preamble"] = [](EccConfig& c, const std::string&, const RawValue& v) { c.prompt_preamble = v.text; };
        s["prompt.pairs"] = [](EccConfig& c, const std::string&, const RawValue& v) { c.prompt_pairs = v.text; };
        s["queue.batch_size"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.queue_batch_size = as_int(k, v);
        };
        s["queue.auto_flush"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            c.queue_auto_flush = as_bool(k, v);
        };
        s["queue.path"] = [](EccConfig& c, const std::string&, const RawValue& v) { c.queue_path = v.text; };
        s["log.path"] = [](EccConfig& c, const std::string&, const RawValue& v) { c.log_path = v.text; };
        s["scorer.similarity"] = [](EccConfig& c, const std::string&, const RawValue& v) {
            c.similarity_scorer = v.text;
        };
        s["scorer.relevance"] = [](EccConfig& c, const std::string&, const RawValue& v) {
            c.relevance_scorer = v.text;
        };
        s["gateway.escalation"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            if (v.text == "sync") {
                c.escalation_mode = EscalationMode::synchronous;
            } else if (v.text == "async") {
                c.escalation_mode = EscalationMode::asynchronous;
            } else {
                bad_value(k, v, "sync or async");
            }
        };
        s["gateway.cors_origin"] = [](EccConfig& c, const std::string&, const RawValue& v) { c.cors_origin = v.text; };
        s["gateway.token_env"] = [](EccConfig& c, const std::string&, const RawValue& v) {
            c.auth_token_env = v.text;
        };
        s["trainer.kind"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            if (v.text == "file_sink") {
                c.trainer = TrainerKind::file_sink;
            } else if (v.text == "noop") {
                c.trainer = TrainerKind::noop;
            } else {
                bad_value(k, v, "file_sink or noop");
            }
        };
        s["trainer.output"] = [](EccConfig& c, const std::string&, const RawValue& v) { c.trainer_output = v.text; };
        s["seed"] = [](EccConfig& c, const std::string& k, const RawValue& v) {
            std::int64_t x = as_int(k, v);
            if (x < 0) bad_value(k, v, "a nonnegative integer");
            c.seed = static_cast<std::uint64_t>(x);
        };
        return s;
    }();
    return table;
}

// Keys that pick a variant; they are applied first and reset the fields owned
// by the variant so the remaining keys can fill them in.
const std::vector<std::string>& structural_keys() {
    static const std::vector<std::string> keys{"training.method", "end.kind", "cloud.kind"};
    return keys;
}

void apply_structural(EccConfig& c, const std::string& key, const RawValue& v) {
    if (key == "training.method") {
        auto m = parse_tuning_method(v.text);
        if (!m) bad_value(key, v, "one of prefix_tuning, p_tuning_v2, lora, none");
        c.training = TrainingJobSpec::defaults_for(*m);
        return;
    }
    auto kind = parse_backend_kind(v.text);
    if (!kind) bad_value(key, v, "one of http_chat, replay, template");
    BackendConfig& b = key == "end.kind" ? c.end_backend : c.cloud_backend;
    reset_for_kind(b, *kind);
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

std::string num(double x) { return format_double(x); }

}  // namespace

EccConfig parse_config(std::string_view text) {
    std::map<std::string, RawValue> entries;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'", lineno);
        }
        std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key", lineno);
        bool known = setters().count(key) > 0;
        for (const auto& s : structural_keys()) known = known || key == s;
        if (!known) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'", lineno, key);
        if (entries.count(key)) {
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'", lineno, key);
        }
        entries[key] = parse_value(std::string_view(t).substr(eq + 1), lineno, key);
    }

    EccConfig cfg;
    for (const auto& key : structural_keys()) {
        if (auto it = entries.find(key); it != entries.end()) apply_structural(cfg, key, it->second);
    }
    for (const auto& [key, value] : entries) {
        if (auto it = setters().find(key); it != setters().end()) it->second(cfg, key, value);
    }

    auto violations = validate_config(cfg);
    if (!violations.empty()) {
        const auto& v = violations.front();
        std::size_t at = 0;
        if (auto it = entries.find(v.field); it != entries.end()) at = it->second.line;
        std::string msg = "invalid value for " + v.field + ": " + v.value + " (" + v.constraint + ")";
        if (at) msg = "line " + std::to_string(at) + ": " + msg;
        throw ConfigError(msg, at, v.field);
    }
    return cfg;
}

EccConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    EccConfig cfg = parse_config(buf.str());

    // Relative file references are relative to the config file itself.
    const auto base = std::filesystem::absolute(path).parent_path();
    const auto rebase = [&](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
    };
    for (BackendConfig* b : {&cfg.end_backend, &cfg.cloud_backend}) {
        if (b->fixture_path) rebase(*b->fixture_path);
    }
    rebase(cfg.prompt_pairs);
    rebase(cfg.queue_path);
    rebase(cfg.log_path);
    rebase(cfg.trainer_output);
    return cfg;
}

std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::filesystem::path>& explicit_path) {
    if (explicit_path) return explicit_path;
    if (const char* env = std::getenv("ECC_CONFIG"); env != nullptr && *env != '\0') {
        return std::filesystem::path(env);
    }
    return std::nullopt;
}

namespace {

void check_backend(std::vector<ConfigViolation>& out, const std::string& prefix, const BackendConfig& b) {
    const bool http = b.kind == BackendKind::http_chat;
    const bool replay = b.kind == BackendKind::replay;
    const bool tmpl = b.kind == BackendKind::template_text;
    if (http) {
        if (!b.endpoint || b.endpoint->empty()) {
            out.push_back({prefix + ".endpoint", "<unset>", "required for http_chat"});
        } else if (b.endpoint->rfind("http://", 0) != 0 && b.endpoint->rfind("https://", 0) != 0) {
            out.push_back({prefix + ".endpoint", *b.endpoint, "must be an http:// or https:// URL"});
        }
    } else if (b.endpoint) {
        out.push_back({prefix + ".endpoint", *b.endpoint, "only valid for http_chat"});
    }
    if (replay) {
        if (!b.fixture_path || b.fixture_path->empty()) {
            out.push_back({prefix + ".fixture", "<unset>", "required for replay"});
        }
    } else if (b.fixture_path) {
        out.push_back({prefix + ".fixture", *b.fixture_path, "only valid for replay"});
    }
    if (tmpl) {
        if (!b.template_text) out.push_back({prefix + ".template", "<unset>", "required for template"});
    } else if (b.template_text) {
        out.push_back({prefix + ".template", *b.template_text, "only valid for template"});
    }
    if (b.timeout_ms <= 0) out.push_back({prefix + ".timeout_ms", std::to_string(b.timeout_ms), "must be > 0"});
    if (b.max_retries < 0) out.push_back({prefix + ".max_retries", std::to_string(b.max_retries), "must be >= 0"});
}

}  // namespace

std::vector<ConfigViolation> validate_config(const EccConfig& cfg) {
    std::vector<ConfigViolation> out;
    const auto unit = [&](const std::string& field, double x) {
        if (!in_unit(x)) out.push_back({field, num(x), "must be within [0,1]"});
    };
    unit("eval.alpha", cfg.eval.alpha);
    unit("eval.theta", cfg.eval.theta);
    unit("eval.tau", cfg.eval.tau);
    unit("eval.sampling_rate", cfg.eval.eval_sampling_rate);

    const auto& g = cfg.generation;
    if (g.max_length <= 0) out.push_back({"generation.max_length", std::to_string(g.max_length), "must be > 0"});
    if (!(g.top_p > 0.0 && g.top_p <= 1.0)) out.push_back({"generation.top_p", num(g.top_p), "must be within (0,1]"});
    if (!(g.temperature >= 0.0)) out.push_back({"generation.temperature", num(g.temperature), "must be >= 0"});
    if (g.max_input_length <= 0) {
        out.push_back({"generation.max_input_length", std::to_string(g.max_input_length), "must be > 0"});
    }
    if (g.max_output_length <= 0) {
        out.push_back({"generation.max_output_length", std::to_string(g.max_output_length), "must be > 0"});
    }

    const auto& t = cfg.training;
    if (t.fine_tuning_steps <= 0) out.push_back({"training.steps", std::to_string(t.fine_tuning_steps), "must be > 0"});
    if (!(t.learning_rate > 0.0)) out.push_back({"training.learning_rate", num(t.learning_rate), "must be > 0"});
    if (t.per_device_batch_size <= 0) {
        out.push_back({"training.batch_size", std::to_string(t.per_device_batch_size), "must be > 0"});
    }
    const bool prefix_like = t.method == TuningMethod::prefix_tuning || t.method == TuningMethod::p_tuning_v2;
    const bool lora = t.method == TuningMethod::lora;
    const std::string method = to_string(t.method);
    if (t.num_virtual_tokens) {
        if (!prefix_like) {
            out.push_back({"training.num_virtual_tokens", std::to_string(*t.num_virtual_tokens),
                           "only valid for prefix_tuning/p_tuning_v2, method is " + method});
        } else if (*t.num_virtual_tokens <= 0) {
            out.push_back({"training.num_virtual_tokens", std::to_string(*t.num_virtual_tokens), "must be > 0"});
        }
    } else if (prefix_like) {
        out.push_back({"training.num_virtual_tokens", "<unset>", "required for " + method});
    }
    const auto lora_int = [&](const std::string& field, const std::optional<int>& v) {
        if (v) {
            if (!lora) {
                out.push_back({field, std::to_string(*v), "only valid for lora, method is " + method});
            } else if (*v <= 0) {
                out.push_back({field, std::to_string(*v), "must be > 0"});
            }
        } else if (lora) {
            out.push_back({field, "<unset>", "required for lora"});
        }
    };
    lora_int("training.lora_rank", t.lora_rank);
    lora_int("training.lora_alpha", t.lora_alpha);
    if (t.lora_dropout) {
        if (!lora) {
            out.push_back({"training.lora_dropout", num(*t.lora_dropout), "only valid for lora, method is " + method});
        } else if (!(*t.lora_dropout >= 0.0 && *t.lora_dropout < 1.0)) {
            out.push_back({"training.lora_dropout", num(*t.lora_dropout), "must be within [0,1)"});
        }
    } else if (lora) {
        out.push_back({"training.lora_dropout", "<unset>", "required for lora"});
    }

    check_backend(out, "end", cfg.end_backend);
    check_backend(out, "cloud", cfg.cloud_backend);
    if (cfg.end_backend == cfg.cloud_backend) {
        out.push_back({"cloud.model", cfg.cloud_backend.model_name, "end and cloud backends must be distinct"});
    }

    if (cfg.prompt_n < 0) out.push_back({"prompt.n", std::to_string(cfg.prompt_n), "must be >= 0"});
    if (cfg.queue_batch_size < 1) {
        out.push_back({"queue.batch_size", std::to_string(cfg.queue_batch_size), "must be >= 1"});
    }
    if (cfg.log_path.empty()) out.push_back({"log.path", "", "must be nonempty"});
    if (cfg.similarity_scorer.empty()) out.push_back({"scorer.similarity", "", "must name a scorer"});
    if (cfg.relevance_scorer.empty()) out.push_back({"scorer.relevance", "", "must name a scorer"});
    return out;
}

namespace {

void emit_backend(std::ostream& os, const std::string& prefix, const BackendConfig& b) {
    os << prefix << ".kind = " << to_string(b.kind) << '\n';
    if (b.endpoint) os << prefix << ".endpoint = " << quote(*b.endpoint) << '\n';
    os << prefix << ".model = " << quote(b.model_name) << '\n';
    os << prefix << ".api_key_env = " << quote(b.api_key_env) << '\n';
    os << prefix << ".timeout_ms = " << b.timeout_ms << '\n';
    os << prefix << ".max_retries = " << b.max_retries << '\n';
    if (b.fixture_path) os << prefix << ".fixture = " << quote(*b.fixture_path) << '\n';
    if (b.template_text) os << prefix << ".template = " << quote(*b.template_text) << '\n';
}

}  // namespace

std::string serialize_config(const EccConfig& cfg) {
    std::ostringstream os;
    os << "eval.alpha = " << num(cfg.eval.alpha) << '\n'
       << "eval.theta = " << num(cfg.eval.theta) << '\n'
       << "eval.tau = " << num(cfg.eval.tau) << '\n'
       << "eval.sampling_rate = " << num(cfg.eval.eval_sampling_rate) << '\n'
       << "generation.max_length = " << cfg.generation.max_length << '\n'
       << "generation.top_p = " << num(cfg.generation.top_p) << '\n'
       << "generation.temperature = " << num(cfg.generation.temperature) << '\n'
       << "generation.max_input_length = " << cfg.generation.max_input_length << '\n'
       << "generation.max_output_length = " << cfg.generation.max_output_length << '\n'
       << "training.method = " << to_string(cfg.training.method) << '\n'
       << "training.steps = " << cfg.training.fine_tuning_steps << '\n'
       << "training.learning_rate = " << num(cfg.training.learning_rate) << '\n'
       << "training.batch_size = " << cfg.training.per_device_batch_size << '\n';
    if (cfg.training.num_virtual_tokens) os << "training.num_virtual_tokens = " << *cfg.training.num_virtual_tokens << '\n';
    if (cfg.training.lora_rank) os << "training.lora_rank = " << *cfg.training.lora_rank << '\n';
    if (cfg.training.lora_alpha) os << "training.lora_alpha = " << *cfg.training.lora_alpha << '\n';
    if (cfg.training.lora_dropout) os << "training.lora_dropout = " << num(*cfg.training.lora_dropout) << '\n';
    emit_backend(os, "end", cfg.end_backend);
    emit_backend(os, "cloud", cfg.cloud_backend);
    os << "prompt.n = " << cfg.prompt_n << '\n';
    if (cfg.prompt_preamble) os << "prompt.preamble = " << quote(*cfg.prompt_preamble) << '\n';
    os << "prompt.pairs = " << quote(cfg.prompt_pairs) << '\n';
    os << "queue.batch_size = " << cfg.queue_batch_size << '\n'
       << "queue.auto_flush = " << (cfg.queue_auto_flush ? "true" : "false") << '\n'
       << "queue.path = " << quote(cfg.queue_path) << '\n'
       << "log.path = " << quote(cfg.log_path) << '\n'
       << "scorer.similarity = " << quote(cfg.similarity_scorer) << '\n'
       << "scorer.relevance = " << quote(cfg.relevance_scorer) << '\n'
       << "gateway.escalation = " << (cfg.escalation_mode == EscalationMode::synchronous ? "sync" : "async") << '\n'
       << "gateway.cors_origin = " << quote(cfg.cors_origin) << '\n'
       << "gateway.token_env = " << quote(cfg.auth_token_env) << '\n'
       << "trainer.kind = " << (cfg.trainer == TrainerKind::file_sink ? "file_sink" : "noop") << '\n'
       << "trainer.output = " << quote(cfg.trainer_output) << '\n'
       << "seed = " << cfg.seed << '\n';
    return os.str();
}

}  // namespace ecc
