#include "ppcheck/util.hpp"

#include "ppcheck/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ppc {

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::MissingFile: return "MissingFile";
        case Errc::MalformedFile: return "MalformedFile";
        case Errc::RaggedRow: return "RaggedRow";
        case Errc::MissingValue: return "MissingValue";
        case Errc::MissingTargetColumn: return "MissingTargetColumn";
        case Errc::TargetNotNumeric: return "TargetNotNumeric";
        case Errc::DuplicateColumn: return "DuplicateColumn";
        case Errc::EmptyColumnName: return "EmptyColumnName";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::NonFiniteValue: return "NonFiniteValue";
        case Errc::UnknownColumnDescription: return "UnknownColumnDescription";
        case Errc::ReplicateLengthMismatch: return "ReplicateLengthMismatch";
        case Errc::NonFiniteSample: return "NonFiniteSample";
        case Errc::EmptySampleSet: return "EmptySampleSet";
        case Errc::AlignmentError: return "AlignmentError";
        case Errc::SyntaxError: return "SyntaxError";
        case Errc::UnknownColumn: return "UnknownColumn";
        case Errc::TypeMismatch: return "TypeMismatch";
        case Errc::InvalidParameter: return "InvalidParameter";
        case Errc::BinIndexOutOfRange: return "BinIndexOutOfRange";
        case Errc::DepthExceeded: return "DepthExceeded";
        case Errc::TargetInPredicate: return "TargetInPredicate";
        case Errc::EmptySlice: return "EmptySlice";
        case Errc::DegenerateMoment: return "DegenerateMoment";
        case Errc::DivisionByZero: return "DivisionByZero";
        case Errc::IndeterminateForm: return "IndeterminateForm";
        case Errc::EmptyFamily: return "EmptyFamily";
        case Errc::InvalidHyperparameters: return "InvalidHyperparameters";
        case Errc::FitNotConverged: return "FitNotConverged";
        case Errc::EmptySuite: return "EmptySuite";
        case Errc::TransportFailure: return "TransportFailure";
        case Errc::MalformedBatch: return "MalformedBatch";
        case Errc::BackendNotConfigured: return "BackendNotConfigured";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::IoError: return "IoError";
    }
    return "UnknownError";
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    // integral values print as integers so column types survive round-trips
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string format_sig6(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(base);
    for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p));
    return s;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::MissingFile, "cannot open '" + path.string() + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(Errc::IoError, "cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.flush()) raise(Errc::IoError, "short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) raise(Errc::IoError, "rename to '" + path.string() + "' failed: " + ec.message());
}

} // namespace ppc
