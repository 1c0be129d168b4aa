#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mrccc/gibbs.hpp"
#include "mrccc/model.hpp"

namespace mrccc {

/// Donor-level expression for one cell type: donors x genes plus the summed
/// library size of each donor.
struct ExpressionTable {
  std::vector<std::string> donors;
  std::vector<std::string> genes;
  MatrixXd values;
  VectorXd library_size;

  /// Unique donor and gene ids, matching shapes, library sizes >= 0.
  void validate() const;
  std::optional<Eigen::Index> gene_index(const std::string& gene) const;
};

/// Generic donors x columns numeric table (genotype dosages, covariates).
struct NumericTable {
  std::vector<std::string> donors;
  std::vector<std::string> columns;
  MatrixXd values;

  void validate() const;
  std::optional<Eigen::Index> column_index(const std::string& name) const;
};

struct SnpInfo {
  std::string id;
  std::string chrom;
  std::int64_t position = 0;
};

/// Dosage matrix whose columns are described by `snps` (same order).
struct GenotypeTable {
  NumericTable dosages;
  std::vector<SnpInfo> snps;
};

/// Expression CSV: `donor,library_size,<gene>...`.
ExpressionTable read_expression_csv(const std::filesystem::path& path);
void write_expression_csv(const std::filesystem::path& path, const ExpressionTable& t);

/// Numeric CSV keyed by a `donor` column.
NumericTable read_numeric_csv(const std::filesystem::path& path);
void write_numeric_csv(const std::filesystem::path& path, const NumericTable& t);

/// SNP metadata CSV: `snp,chrom,position`.
std::vector<SnpInfo> read_snp_info(const std::filesystem::path& path);

/// Joins dosages with SNP metadata; DataError if any dosage column lacks a
/// position.
GenotypeTable make_genotype_table(NumericTable dosages,
                                  const std::vector<SnpInfo>& info);

struct DonorAlignment {
  std::vector<std::string> donors;  // kept, in the order of the first table
  /// Donors absent from at least one table, with the table names they lack.
  std::vector<std::pair<std::string, std::string>> dropped;
};

/// Intersects donor lists. `names` labels each list in the drop report.
/// Throws DataError on an empty intersection.
DonorAlignment align_donors(const std::vector<std::vector<std::string>>& donor_lists,
                            const std::vector<std::string>& names);

ExpressionTable subset_donors(const ExpressionTable& t,
                              const std::vector<std::string>& donors);
NumericTable subset_donors(const NumericTable& t,
                           const std::vector<std::string>& donors);

/// One pass of the library-size rule: keep iff size <= median + 3 MAD and
/// size >= 0.25 median, MAD being the unscaled median absolute deviation.
std::vector<bool> library_size_mask(const VectorXd& library_size);

/// Mask over the (aligned) donors of both tables. A donor failing the rule in
/// either cell type is dropped; the rule is re-applied to the survivors until
/// nothing changes. Throws DataError if every donor is excluded.
std::vector<bool> filter_donors(const ExpressionTable& sender,
                                const ExpressionTable& receiver);

/// Scales every donor row by median(library_size) / library_size.
ExpressionTable normalize_library_size(const ExpressionTable& t);

struct GeneLocus {
  std::string gene;
  std::string chrom;
  std::int64_t promoter = -1;  // < 0 means unknown
};

inline constexpr std::int64_t kCisWindow = 200000;
inline constexpr int kMaxInstruments = 10;

struct InstrumentSelection {
  std::vector<Eigen::Index> columns;  // into the genotype table, best first
  std::vector<std::string> snps;
  std::vector<double> t_stats;
  std::string reason;  // set when no instrument qualifies

  bool empty() const { return columns.empty(); }
};

/// Ranks in-window SNPs by |t| of the dosage in expression ~ 1 + covariates +
/// dosage and returns at most `max_count`. Constant dosages are skipped.
/// Throws DataError when the gene position is unknown.
InstrumentSelection select_instruments(const GenotypeTable& genotypes,
                                       const GeneLocus& gene,
                                       const VectorXd& expression,
                                       const MatrixXd& covariates,
                                       std::int64_t window = kCisWindow,
                                       int max_count = kMaxInstruments);

enum class Association { Pearson, Spearman };
Association parse_association(const std::string& s);
std::string to_string(Association a);

double association(const VectorXd& a, const VectorXd& b, Association kind);

enum class Representation { PC1, Mean };
std::string to_string(Representation r);

struct PathwayActivity {
  VectorXd values;
  Representation chosen = Representation::Mean;
  VectorXd pc1;
  VectorXd mean;
  double assoc_pc1 = 0.0;
  double assoc_mean = 0.0;
  double pc1_variance_share = 0.0;
  std::vector<Eigen::Index> genes_used;  // columns with non-zero variance
};

/// Builds PC1 and mean representations from the column-standardized pathway
/// submatrix (donors x genes) and keeps PC1 only if its absolute association
/// with the ligand is strictly larger.
PathwayActivity pathway_activity(const MatrixXd& pathway, const VectorXd& ligand,
                                 Association kind = Association::Pearson);

struct TripletSpec {
  GeneLocus ligand;
  GeneLocus receptor;
  std::string pathway;
  std::vector<std::string> pathway_genes;
  std::filesystem::path sender;
  std::filesystem::path receiver;
  std::filesystem::path genotypes;
  std::filesystem::path snps;
  std::filesystem::path covariates;  // may be empty when no covariates
  std::vector<std::string> covariate_columns;

  std::string id() const;
};

struct ScreenSettings {
  std::uint64_t master_seed = 0;
  McmcSettings mcmc = McmcSettings::screening();
  Association association = Association::Pearson;
  std::int64_t window = kCisWindow;
  int max_instruments = kMaxInstruments;
};

enum class ScreenStatus { Ok, Excluded, Failed };
std::string to_string(ScreenStatus s);

struct ScreenResult {
  std::string triplet;
  ScreenStatus status = ScreenStatus::Ok;
  std::string reason;
  int n_donors = 0;
  int n_instruments_ligand = 0;
  int n_instruments_receptor = 0;
  Representation representation = Representation::Mean;
  PosteriorSummary posterior;
  EffectSummary effects;
  SignReversal sign_reversal;
};

/// Per-triplet chain seed, a function of the master seed and gene ids only.
std::uint64_t triplet_seed(std::uint64_t master_seed, const TripletSpec& t);

/// Tables shared by triplets, loaded once per path. Safe to share between
/// worker threads.
class TableCache {
 public:
  const ExpressionTable& expression(const std::filesystem::path& p);
  const NumericTable& numeric(const std::filesystem::path& p);
  const std::vector<SnpInfo>& snps(const std::filesystem::path& p);

 private:
  std::map<std::filesystem::path, ExpressionTable> expr_;
  std::map<std::filesystem::path, NumericTable> num_;
  std::map<std::filesystem::path, std::vector<SnpInfo>> snp_;
  std::mutex mutex_;
};

/// Assembles the donor-level Dataset for a triplet (without fitting).
/// On exclusion `result.status` is set and the returned dataset is empty.
Dataset assemble_triplet(const TripletSpec& t, TableCache& cache,
                         const ScreenSettings& s, ScreenResult& result);

ScreenResult screen_triplet(const TripletSpec& t, TableCache& cache,
                            const ScreenSettings& s);

struct Manifest {
  ScreenSettings settings;
  std::vector<TripletSpec> triplets;
};

/// JSON manifest; relative paths resolve against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);

/// Screens every triplet on `jobs` workers. Output is sorted by triplet id.
/// Per-triplet errors become Failed rows tagged with the triplet id.
std::vector<ScreenResult> screen_manifest(const Manifest& m, int jobs);

void write_screen_csv(std::ostream& out, const std::vector<ScreenResult>& rows);

}  // namespace mrccc
