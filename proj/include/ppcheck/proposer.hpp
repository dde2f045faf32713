#pragma once

#include "ppcheck/dataset.hpp"
#include "ppcheck/dsl.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace ppc {

struct ProposalRequest {
    DatasetMetadata metadata;
    ModelRepresentation model;
    int n_proposals = 24;
    nlohmann::ordered_json sampling; // opaque backend parameters, forwarded verbatim
};

/// Proposals plus rejection accounting. family_size is what Bonferroni
/// divides by and is conserved by every downstream transformation:
/// accepted + rejected never loses a proposal.
struct ProposalBatch {
    std::vector<StatisticSpec> accepted;
    std::vector<RejectedSpec> rejected;
    std::size_t family_size = 0;
};

/// Deterministic offline proposer. Enumerates, in seeded order: global
/// aggregates of the target; per binary/categorical feature, slice
/// differences of mean/std/variance across levels in both orientations
/// (pairwise for up to 5 levels, top-2 by frequency beyond); per real
/// feature, variance spread across quantile_bin(3) slices. Truncates or
/// cycles to n_proposals. Any schema with a binary feature gets sliced
/// statistics for it.
ProposalBatch propose_catalog(const Dataset& schema, int n_proposals, std::uint64_t seed);

/// The full enumeration behind propose_catalog, before truncation/cycling.
std::vector<StatisticSpec> catalog_enumeration(const Dataset& schema, std::uint64_t seed);

struct ExternalEndpoint {
    std::string base_url;     // e.g. http://host:port
    std::string path = "/propose";
    std::string model_name;
    std::string api_key_env = "PPCHECK_API_KEY"; // credential comes from the environment only
    int max_retries = 3;

    /// Replay a recorded session instead of calling out.
    std::filesystem::path fixture;

    /// Test seam: when set, transport(request) replaces the HTTP call.
    std::function<nlohmann::ordered_json(const nlohmann::ordered_json&)> transport;
};

/// Builds the wire request (system prompt + metadata block + model program),
/// sends it (with bounded retries), and parses each returned proposal as DSL
/// text or a structured AST record. Parse failures land in rejected with the
/// reason; family_size is the number of proposals the backend returned.
ProposalBatch propose_external(const ProposalRequest& req, const ExternalEndpoint& endpoint);

/// Moves accepted specs that fail validation against d into rejected, and
/// deduplicates by canonical print (duplicates are rejected with reason
/// "duplicate"). family_size is unchanged.
ProposalBatch validate_batch(const ProposalBatch& batch, const Dataset& d);

/// Role text plus the DSL cheat-sheet appended for the external backend.
std::string proposer_system_prompt();

/// Wire shapes, versioned.
nlohmann::ordered_json proposal_request_to_json(const ProposalRequest& req, const ExternalEndpoint& endpoint);
nlohmann::ordered_json proposal_batch_to_json(const ProposalBatch& batch);
ProposalBatch proposal_batch_from_json(const nlohmann::ordered_json& doc);

} // namespace ppc
