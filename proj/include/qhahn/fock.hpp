#pragma once

// Truncated occupation spaces and the operators of the open chain on them.

#include "qhahn/rates.hpp"
#include "qhahn/sparse_operator.hpp"

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qhahn {

/// Occupation numbers, one per site, site 0 first.
struct OccupationState {
    std::vector<int> occ;

    friend bool operator==(const OccupationState&, const OccupationState&) = default;
};

/// N sites, each holding 0..cap particles. States are indexed in mixed radix
/// cap+1 with site 0 the most significant digit.
class TruncatedSpace {
public:
    TruncatedSpace(int n_sites, int cap);

    int n_sites() const noexcept { return n_sites_; }
    int cap() const noexcept { return cap_; }
    std::size_t local_dim() const noexcept { return static_cast<std::size_t>(cap_) + 1; }
    std::size_t dimension() const noexcept { return dim_; }

    std::size_t encode(const OccupationState& s) const;
    OccupationState decode(std::size_t index) const;
    /// Occupation of one site without decoding the whole state.
    int occupation(std::size_t index, int site) const;

    friend bool operator==(const TruncatedSpace&, const TruncatedSpace&) = default;

private:
    int n_sites_;
    int cap_;
    std::size_t dim_;
    std::vector<std::size_t> stride_;
};

enum class Truncation {
    Raw,            // over-cap transitions dropped, diagonal left as in the infinite chain
    Stochasticized  // diagonal reduced to the retained escape rates; columns sum to 0
};

std::string to_string(Truncation t);
Truncation truncation_from_string(const std::string& s);

struct BuildOptions {
    double tol = 1e-14;  // insertion series cutoff
    Truncation mode = Truncation::Raw;
    std::size_t dimension_limit = 2'000'000;
};

/// Operator on the cap-truncated single site space (dimension cap+1).
std::size_t local_dimension(int cap);

/// Two-site bulk term acting on |m, m'> (site pair index m*(cap+1)+m').
SparseOperator bulk_density(const RateModel& rates, int cap, Truncation mode = Truncation::Raw);
SparseOperator bulk_density(const ModelParams& p, int cap, Truncation mode = Truncation::Raw);

/// Reservoir coupling at site 1 (left) or site N (right).
SparseOperator boundary_operator(const RateModel& rates, Side side, int cap, double tol,
                                 Truncation mode = Truncation::Raw);
SparseOperator boundary_left(const ModelParams& p, int cap, double tol, Truncation mode = Truncation::Raw);
SparseOperator boundary_right(const ModelParams& p, int cap, double tol, Truncation mode = Truncation::Raw);

/// Insertion depth actually kept for a site holding m particles.
int insertion_depth(const RateModel& rates, Side side, int m, int cap, double tol);

/// Tensor embedding: `op` acts on `sites` (listed most significant first),
/// identity elsewhere.
SparseOperator embed(const SparseOperator& op, const std::vector<int>& sites, const TruncatedSpace& space);

/// B_L on site 0 + bulk terms on each neighbouring pair + B_R on site N-1.
/// N = 1 gives B_L + B_R on the single site.
SparseOperator full_hamiltonian(const RateModel& rates, int n_sites, int cap, const BuildOptions& opt = {});
SparseOperator full_hamiltonian(const ModelParams& p, int n_sites, int cap, const BuildOptions& opt = {});

/// M = -H^t.
SparseOperator markov_generator(const SparseOperator& h);

// ---- text dump -----------------------------------------------------------

/// `# key: value` header lines followed by `row col value` triplets.
struct OperatorDump {
    std::map<std::string, std::string> header;
    SparseOperator op;
};

void write_operator_dump(std::ostream& os, const SparseOperator& op,
                         const std::vector<std::pair<std::string, std::string>>& header);
OperatorDump read_operator_dump(std::istream& is);

}  // namespace qhahn
