#pragma once

#include <stdexcept>
#include <string>

namespace cca {

// Error categories, used by the CLI to map failures onto exit codes:
// config/validation problems exit 1, numerical failures exit 2.
enum class errc {
    invalid_config,
    atom_out_of_range,
    rank_deficient,
    pole_hit,
    denominator_vanishes,
    bracket_singular,
    no_convergence,
    wrong_branch,
    io_error,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::invalid_config:      return "InvalidConfig";
        case errc::atom_out_of_range:   return "AtomOutOfRange";
        case errc::rank_deficient:      return "RankDeficient";
        case errc::pole_hit:            return "PoleHit";
        case errc::denominator_vanishes:return "DenominatorVanishes";
        case errc::bracket_singular:    return "BracketSingular";
        case errc::no_convergence:      return "NoConvergence";
        case errc::wrong_branch:        return "WrongBranch";
        case errc::io_error:            return "IoError";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
  public:
    Error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    errc code() const noexcept { return code_; }
    bool is_numerical() const noexcept {
        switch (code_) {
            case errc::rank_deficient:
            case errc::pole_hit:
            case errc::denominator_vanishes:
            case errc::bracket_singular:
            case errc::no_convergence:
            case errc::wrong_branch:
                return true;
            default:
                return false;
        }
    }

  private:
    errc code_;
};

struct InvalidConfig : Error {
    explicit InvalidConfig(const std::string& w) : Error(errc::invalid_config, w) {}
};
struct AtomOutOfRange : Error {
    explicit AtomOutOfRange(const std::string& w) : Error(errc::atom_out_of_range, w) {}
};
struct RankDeficient : Error {
    explicit RankDeficient(const std::string& w) : Error(errc::rank_deficient, w) {}
};
struct PoleHit : Error {
    explicit PoleHit(const std::string& w) : Error(errc::pole_hit, w) {}
};
struct DenominatorVanishes : Error {
    explicit DenominatorVanishes(const std::string& w) : Error(errc::denominator_vanishes, w) {}
};
struct BracketSingular : Error {
    explicit BracketSingular(const std::string& w) : Error(errc::bracket_singular, w) {}
};
struct NoConvergence : Error {
    explicit NoConvergence(const std::string& w) : Error(errc::no_convergence, w) {}
};
struct WrongBranch : Error {
    explicit WrongBranch(const std::string& w) : Error(errc::wrong_branch, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(errc::io_error, w) {}
};

}  // namespace cca
