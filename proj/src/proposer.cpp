#include "ppcheck/proposer.hpp"

#include "ppcheck/util.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <thread>

// httplib is pulled in lazily by the transport so unit tests stay light.
#include <httplib.h>

namespace ppc {

using json = nlohmann::ordered_json;
using ordered_json = nlohmann::ordered_json;

namespace {

ExprPtr agg(AggKind kind, std::optional<Predicate> slice = std::nullopt) {
    AggExpr e;
    e.kind = kind;
    if (kind == AggKind::Quantile) e.q = 0.5;
    e.slice = std::move(slice);
    return make_agg(std::move(e));
}

Predicate cmp_pred(const std::string& column, Literal value) {
    return Predicate{{CmpAtom{column, CmpOp::Eq, std::move(value)}}};
}

Predicate bin_pred(const std::string& column, int k, int index) {
    return Predicate{{QuantileBinAtom{column, k, index}}};
}

StatisticSpec slice_diff(AggKind kind, const std::string& column, const Literal& a,
                         const Literal& b) {
    return StatisticSpec{
        make_combine(CombineOp::Sub, agg(kind, cmp_pred(column, a)), agg(kind, cmp_pred(column, b)))};
}

// Deterministic Fisher-Yates on the standardized mt19937_64 stream; std::shuffle
// is implementation-defined and would break cross-platform replays.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[static_cast<std::size_t>(eng() % i)]);
}

/// Distinct values of a feature column usable as slice levels, with counts.
struct LevelSet {
    std::vector<Literal> levels; // ordered by frequency (desc), then first seen
    bool usable = false;
};

LevelSet feature_levels(const Column& c) {
    LevelSet out;
    if (c.type == ColumnType::Categorical) {
        std::vector<std::pair<std::size_t, std::int32_t>> counts; // count, code
        counts.resize(c.labels.size());
        for (std::size_t i = 0; i < c.labels.size(); ++i)
            counts[i] = {0, static_cast<std::int32_t>(i)};
        for (auto code : c.codes) ++counts[static_cast<std::size_t>(code)].first;
        std::stable_sort(counts.begin(), counts.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (const auto& [count, code] : counts)
            if (count > 0) out.levels.emplace_back(c.labels[static_cast<std::size_t>(code)]);
    } else if (c.type == ColumnType::Boolean) {
        std::size_t ones = 0;
        for (auto f : c.flags) ones += f ? 1 : 0;
        const std::size_t zeros = c.flags.size() - ones;
        if (ones > 0 && zeros > 0) {
            out.levels.emplace_back(false);
            out.levels.emplace_back(true);
        }
    } else if (c.type == ColumnType::Integer) {
        std::map<double, std::size_t> counts;
        for (Eigen::Index i = 0; i < c.values.size(); ++i) ++counts[c.values[i]];
        if (counts.size() == 2)
            for (const auto& [v, _] : counts) out.levels.emplace_back(v);
    }
    out.usable = out.levels.size() >= 2;
    return out;
}

bool treat_as_real(const Column& c) {
    if (c.type == ColumnType::Real) return true;
    if (c.type != ColumnType::Integer) return false;
    std::set<double> distinct;
    for (Eigen::Index i = 0; i < c.values.size(); ++i) {
        distinct.insert(c.values[i]);
        if (distinct.size() > 2) return true;
    }
    return false;
}

} // namespace

std::vector<StatisticSpec> catalog_enumeration(const Dataset& schema, std::uint64_t seed) {
    std::vector<std::vector<StatisticSpec>> blocks;

    std::vector<StatisticSpec> global;
    for (AggKind k : {AggKind::Mean, AggKind::Variance, AggKind::Std, AggKind::Skewness,
                      AggKind::ExcessKurtosis, AggKind::Range, AggKind::DispersionRatio})
        global.push_back(StatisticSpec{agg(k)});
    blocks.push_back(std::move(global));

    static constexpr AggKind kSliceKinds[] = {AggKind::Mean, AggKind::Std, AggKind::Variance};

    for (const auto& c : schema.columns()) {
        if (c.name == schema.target()) continue;
        const LevelSet levels = feature_levels(c);
        if (levels.usable) {
            std::vector<Literal> chosen = levels.levels;
            if (chosen.size() > 5) chosen.resize(2); // top-2 by frequency
            std::vector<StatisticSpec> block;
            for (std::size_t i = 0; i < chosen.size(); ++i)
                for (std::size_t j = i + 1; j < chosen.size(); ++j)
                    for (AggKind k : kSliceKinds) {
                        block.push_back(slice_diff(k, c.name, chosen[i], chosen[j]));
                        block.push_back(slice_diff(k, c.name, chosen[j], chosen[i]));
                    }
            blocks.push_back(std::move(block));
        } else if (treat_as_real(c)) {
            std::vector<StatisticSpec> block;
            auto lo = [&] { return agg(AggKind::Variance, bin_pred(c.name, 3, 0)); };
            auto hi = [&] { return agg(AggKind::Variance, bin_pred(c.name, 3, 2)); };
            block.push_back(StatisticSpec{make_combine(CombineOp::Sub, hi(), lo())});
            block.push_back(StatisticSpec{make_combine(CombineOp::Sub, lo(), hi())});
            block.push_back(StatisticSpec{make_combine(CombineOp::Ratio, hi(), lo())});
            block.push_back(StatisticSpec{make_combine(CombineOp::Ratio, lo(), hi())});
            blocks.push_back(std::move(block));
        }
    }

    std::vector<StatisticSpec> out;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        seeded_shuffle(blocks[b], derive_seed(seed, {0xca7ULL, b}));
        for (auto& s : blocks[b]) out.push_back(std::move(s));
    }
    return out;
}

ProposalBatch propose_catalog(const Dataset& schema, int n_proposals, std::uint64_t seed) {
    if (n_proposals < 1) raise(Errc::InvalidParameter, "n_proposals must be at least 1");
    const auto all = catalog_enumeration(schema, seed);
    ProposalBatch batch;
    batch.family_size = static_cast<std::size_t>(n_proposals);
    batch.accepted.reserve(batch.family_size);
    for (int i = 0; i < n_proposals; ++i)
        batch.accepted.push_back(all[static_cast<std::size_t>(i) % all.size()]);
    return batch;
}

ProposalBatch validate_batch(const ProposalBatch& batch, const Dataset& d) {
    ProposalBatch out;
    out.family_size = batch.family_size;
    out.rejected = batch.rejected;
    std::set<std::string> seen;
    for (const auto& spec : batch.accepted) {
        const std::string text = print_spec(spec);
        if (!seen.insert(text).second) {
            out.rejected.push_back({text, "duplicate"});
            continue;
        }
        try {
            validate_spec(spec, d);
        } catch (const Error& e) {
            out.rejected.push_back({text, e.what()});
            continue;
        }
        out.accepted.push_back(spec);
    }
    return out;
}

// --- external backend ------------------------------------------------------------

std::string proposer_system_prompt() {
    return "You are an expert statistician reviewing a colleague's generative model for a "
           "dataset.\n"
           "Propose test statistics that could expose discrepancies between data generated by "
           "the model and the observed data. Each statistic will be evaluated on every model "
           "sample to form a null distribution and then compared against its value on the "
           "observed data, in the style of a posterior predictive check, so choose statistics "
           "that would look atypical if the model were wrong. Slice on feature columns when a "
           "discrepancy may be local to a subpopulation.\n"
           "\n"
           "Respond with a JSON object of the form {\"proposals\": [\"...\", ...]} where every "
           "element is one statistic written in the statistic language below. Do not return "
           "anything else.\n"
           "\n"
           "Statistic language:\n"
           "  expr      := operand { (\"-\" | \"/\") operand }\n"
           "  operand   := \"(\" expr \")\" | \"abs\" \"(\" expr \"-\" expr \")\" | aggregate\n"
           "  aggregate := kind \"(\" [numbers] [[\",\"] \"where\" atom {\"and\" atom}] \")\"\n"
           "  kind      := mean | variance | std | min | max | range | quantile(q) | count |\n"
           "               skewness | excess_kurtosis | dispersion_ratio | "
           "proportion_outside(lo, hi)\n"
           "  atom      := column (== | != | < | <= | > | >=) literal\n"
           "             | column in {\"label\", ...}\n"
           "             | column in quantile_bin(k, index)\n"
           "Predicates may only reference feature columns, never the target.\n"
           "Examples: mean(), std(where floor == 0) - std(where floor == 1),\n"
           "          variance(where x in quantile_bin(3, 2)) / variance(where x in "
           "quantile_bin(3, 0))\n";
}

nlohmann::ordered_json proposal_request_to_json(const ProposalRequest& req,
                                        const ExternalEndpoint& endpoint) {
    ordered_json doc;
    doc["wire_version"] = 1;
    doc["system_prompt"] = proposer_system_prompt();
    doc["metadata"] = metadata_to_json(req.metadata);
    doc["model_program"] = req.model.program_text;
    doc["n"] = req.n_proposals;
    doc["sampling"] = req.sampling.is_null() ? json::object() : req.sampling;
    if (!endpoint.model_name.empty()) doc["model_name"] = endpoint.model_name;
    return doc;
}

namespace {

json http_transport(const json& request, const ExternalEndpoint& endpoint) {
    httplib::Client client(endpoint.base_url);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(endpoint.api_key_env.c_str()))
        headers.emplace("Authorization", std::string("Bearer ") + key);
    std::string last_error;
    for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
        auto res = client.Post(endpoint.path, headers, request.dump(), "application/json");
        if (!res) {
            last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "status " + std::to_string(res->status);
            if (res->status >= 400 && res->status < 500 && res->status != 429) break;
            continue;
        }
        json body = json::parse(res->body, nullptr, false);
        if (body.is_discarded()) {
            last_error = "response is not valid json";
            continue;
        }
        return body;
    }
    raise(Errc::TransportFailure, "proposal backend unreachable: " + last_error);
}

json replay_transport(const json& request, const std::filesystem::path& fixture) {
    json doc = json::parse(read_text_file(fixture), nullptr, false);
    if (doc.is_discarded())
        raise(Errc::MalformedFile, "fixture '" + fixture.string() + "' is not valid json");
    if (doc.contains("request") && doc["request"].contains("n") &&
        doc["request"]["n"] != request["n"])
        raise(Errc::MalformedBatch,
              "fixture records a session with n=" + doc["request"]["n"].dump() +
                  ", request asked for n=" + request["n"].dump());
    if (!doc.contains("response"))
        raise(Errc::MalformedFile, "fixture '" + fixture.string() + "' has no response record");
    return doc["response"];
}

} // namespace

ProposalBatch propose_external(const ProposalRequest& req, const ExternalEndpoint& endpoint) {
    const json request = proposal_request_to_json(req, endpoint);
    json response;
    if (endpoint.transport) {
        response = endpoint.transport(request);
    } else if (!endpoint.fixture.empty()) {
        response = replay_transport(request, endpoint.fixture);
    } else if (!endpoint.base_url.empty()) {
        response = http_transport(request, endpoint);
    } else {
        raise(Errc::BackendNotConfigured,
              "external proposer needs a base_url, fixture, or transport");
    }

    if (!response.is_object() || !response.contains("proposals") ||
        !response["proposals"].is_array())
        raise(Errc::MalformedBatch, "backend response has no 'proposals' array");

    ProposalBatch batch;
    batch.family_size = response["proposals"].size();
    for (const auto& item : response["proposals"]) {
        try {
            if (item.is_string())
                batch.accepted.push_back(parse_spec(item.get<std::string>()));
            else if (item.is_object())
                batch.accepted.push_back(spec_from_json(item));
            else
                raise(Errc::MalformedBatch, "proposal must be DSL text or an AST record");
        } catch (const Error& e) {
            batch.rejected.push_back({item.is_string() ? item.get<std::string>() : item.dump(),
                                      e.what()});
        }
    }
    return batch;
}

nlohmann::ordered_json proposal_batch_to_json(const ProposalBatch& batch) {
    ordered_json doc;
    doc["family_size"] = batch.family_size;
    doc["accepted"] = json::array();
    for (const auto& spec : batch.accepted) doc["accepted"].push_back(print_spec(spec));
    doc["rejected"] = json::array();
    for (const auto& rej : batch.rejected) {
        ordered_json jr;
        jr["spec"] = rej.text;
        jr["reason"] = rej.reason;
        doc["rejected"].push_back(std::move(jr));
    }
    return doc;
}

ProposalBatch proposal_batch_from_json(const nlohmann::ordered_json& doc) {
    ProposalBatch batch;
    batch.family_size = doc.value("family_size", std::size_t{0});
    if (doc.contains("accepted"))
        for (const auto& s : doc["accepted"])
            batch.accepted.push_back(parse_spec(s.get<std::string>()));
    if (doc.contains("rejected"))
        for (const auto& r : doc["rejected"])
            batch.rejected.push_back({r.value("spec", ""), r.value("reason", "")});
    if (batch.family_size == 0) batch.family_size = batch.accepted.size() + batch.rejected.size();
    return batch;
}

} // namespace ppc
