#include "mrccc/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "mrccc/csv.hpp"
#include "mrccc/errors.hpp"
#include "mrccc/parallel.hpp"
#include "mrccc/rng.hpp"

namespace mrccc {
namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median of empty vector");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

void check_unique(const std::vector<std::string>& ids, const std::string& what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw DataError("duplicate " + what + " id '" + id + "'");
  }
}

std::vector<Eigen::Index> row_positions(const std::vector<std::string>& have,
                                        const std::vector<std::string>& want) {
  std::unordered_map<std::string, Eigen::Index> pos;
  for (std::size_t i = 0; i < have.size(); ++i) pos[have[i]] = static_cast<Eigen::Index>(i);
  std::vector<Eigen::Index> out;
  out.reserve(want.size());
  for (const auto& d : want) {
    auto it = pos.find(d);
    if (it == pos.end()) throw DataError("donor '" + d + "' not present in table");
    out.push_back(it->second);
  }
  return out;
}

MatrixXd take_rows(const MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

MatrixXd take_cols(const MatrixXd& m, const std::vector<Eigen::Index>& cols) {
  MatrixXd out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

double pearson(const VectorXd& a, const VectorXd& b) {
  const VectorXd ca = a.array() - a.mean();
  const VectorXd cb = b.array() - b.mean();
  const double den = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
  if (den <= 0.0) return 0.0;
  return ca.dot(cb) / den;
}

// Average ranks, ties sharing the mean of their positions.
VectorXd ranks(const VectorXd& v) {
  const auto n = static_cast<std::size_t>(v.size());
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return v(static_cast<Eigen::Index>(i)) < v(static_cast<Eigen::Index>(j));
  });
  VectorXd r(v.size());
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v(static_cast<Eigen::Index>(idx[j + 1])) == v(static_cast<Eigen::Index>(idx[i]))) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r(static_cast<Eigen::Index>(idx[k])) = avg;
    i = j + 1;
  }
  return r;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

// ---------------------------------------------------------------- tables

void ExpressionTable::validate() const {
  check_unique(donors, "donor");
  check_unique(genes, "gene");
  const auto n = static_cast<Eigen::Index>(donors.size());
  if (values.rows() != n || values.cols() != static_cast<Eigen::Index>(genes.size()) ||
      library_size.size() != n) {
    throw ValidationError("expression table shape mismatch");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(library_size(i) >= 0.0)) {
      throw DataError("negative library size for donor '" + donors[static_cast<std::size_t>(i)] + "'");
    }
  }
}

std::optional<Eigen::Index> ExpressionTable::gene_index(const std::string& gene) const {
  auto it = std::find(genes.begin(), genes.end(), gene);
  if (it == genes.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - genes.begin());
}

void NumericTable::validate() const {
  check_unique(donors, "donor");
  check_unique(columns, "column");
  if (values.rows() != static_cast<Eigen::Index>(donors.size()) ||
      values.cols() != static_cast<Eigen::Index>(columns.size())) {
    throw ValidationError("numeric table shape mismatch");
  }
}

std::optional<Eigen::Index> NumericTable::column_index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - columns.begin());
}

ExpressionTable read_expression_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.rows.empty()) throw DataError(path.string() + ": empty table");
  const auto cd = t.column("donor");
  const auto cl = t.column("library_size");
  if (!cd || !cl) throw DataError(path.string() + ": needs 'donor' and 'library_size' columns");
  ExpressionTable e;
  std::vector<std::size_t> gene_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == *cd || c == *cl) continue;
    gene_cols.push_back(c);
    e.genes.push_back(t.header[c]);
  }
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  e.values.resize(n, static_cast<Eigen::Index>(gene_cols.size()));
  e.library_size.resize(n);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    e.donors.push_back(t.rows[r][*cd]);
    e.library_size(i) = parse_cell(t, r, *cl);
    for (std::size_t j = 0; j < gene_cols.size(); ++j)
      e.values(i, static_cast<Eigen::Index>(j)) = parse_cell(t, r, gene_cols[j]);
  }
  try {
    e.validate();
  } catch (const std::exception& ex) {
    throw DataError(path.string() + ": " + ex.what());
  }
  return e;
}

void write_expression_csv(const std::filesystem::path& path, const ExpressionTable& t) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<std::string> row{"donor", "library_size"};
  row.insert(row.end(), t.genes.begin(), t.genes.end());
  write_csv_row(out, row);
  for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
    row = {t.donors[static_cast<std::size_t>(i)], format_double(t.library_size(i))};
    for (Eigen::Index j = 0; j < t.values.cols(); ++j) row.push_back(format_double(t.values(i, j)));
    write_csv_row(out, row);
  }
}

NumericTable read_numeric_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.rows.empty()) throw DataError(path.string() + ": empty table");
  const auto cd = t.column("donor");
  if (!cd) throw DataError(path.string() + ": needs a 'donor' column");
  NumericTable nt;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == *cd) continue;
    cols.push_back(c);
    nt.columns.push_back(t.header[c]);
  }
  nt.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    nt.donors.push_back(t.rows[r][*cd]);
    for (std::size_t j = 0; j < cols.size(); ++j)
      nt.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = parse_cell(t, r, cols[j]);
  }
  try {
    nt.validate();
  } catch (const std::exception& ex) {
    throw DataError(path.string() + ": " + ex.what());
  }
  return nt;
}

void write_numeric_csv(const std::filesystem::path& path, const NumericTable& t) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<std::string> row{"donor"};
  row.insert(row.end(), t.columns.begin(), t.columns.end());
  write_csv_row(out, row);
  for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
    row = {t.donors[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < t.values.cols(); ++j) row.push_back(format_double(t.values(i, j)));
    write_csv_row(out, row);
  }
}

std::vector<SnpInfo> read_snp_info(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const auto cs = t.column("snp");
  const auto cc = t.column("chrom");
  const auto cp = t.column("position");
  if (!cs || !cc || !cp) throw DataError(path.string() + ": needs snp, chrom and position columns");
  std::vector<SnpInfo> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double pos = parse_cell(t, r, *cp);
    if (pos < 0 || pos != std::floor(pos)) {
      throw DataError(path.string() + ":" + std::to_string(t.line_numbers[r]) +
                      ": position must be a non-negative integer");
    }
    out.push_back({t.rows[r][*cs], t.rows[r][*cc], static_cast<std::int64_t>(pos)});
  }
  return out;
}

GenotypeTable make_genotype_table(NumericTable dosages, const std::vector<SnpInfo>& info) {
  std::unordered_map<std::string, const SnpInfo*> by_id;
  for (const auto& s : info) by_id[s.id] = &s;
  GenotypeTable g;
  for (const auto& c : dosages.columns) {
    auto it = by_id.find(c);
    if (it == by_id.end()) throw DataError("no position metadata for SNP '" + c + "'");
    g.snps.push_back(*it->second);
  }
  g.dosages = std::move(dosages);
  return g;
}

DonorAlignment align_donors(const std::vector<std::vector<std::string>>& donor_lists,
                            const std::vector<std::string>& names) {
  if (donor_lists.empty()) throw ValidationError("align_donors: no tables");
  if (names.size() != donor_lists.size()) throw ValidationError("align_donors: one name per table");
  std::vector<std::unordered_set<std::string>> sets;
  for (const auto& l : donor_lists) sets.emplace_back(l.begin(), l.end());

  DonorAlignment a;
  std::set<std::string> reported;
  for (std::size_t t = 0; t < donor_lists.size(); ++t) {
    for (const auto& d : donor_lists[t]) {
      std::string missing;
      for (std::size_t u = 0; u < sets.size(); ++u) {
        if (!sets[u].count(d)) missing += (missing.empty() ? "" : ";") + names[u];
      }
      if (missing.empty()) {
        if (t == 0) a.donors.push_back(d);
      } else if (reported.insert(d).second) {
        a.dropped.emplace_back(d, missing);
      }
    }
  }
  if (a.donors.empty()) throw DataError("no donors shared by all tables");
  return a;
}

ExpressionTable subset_donors(const ExpressionTable& t, const std::vector<std::string>& donors) {
  const auto rows = row_positions(t.donors, donors);
  ExpressionTable out;
  out.donors = donors;
  out.genes = t.genes;
  out.values = take_rows(t.values, rows);
  out.library_size.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out.library_size(static_cast<Eigen::Index>(i)) = t.library_size(rows[i]);
  return out;
}

NumericTable subset_donors(const NumericTable& t, const std::vector<std::string>& donors) {
  NumericTable out;
  out.donors = donors;
  out.columns = t.columns;
  out.values = take_rows(t.values, row_positions(t.donors, donors));
  return out;
}

// ------------------------------------------------------ donor filtering

std::vector<bool> library_size_mask(const VectorXd& library_size) {
  std::vector<double> v(library_size.data(), library_size.data() + library_size.size());
  const double med = median_of(v);
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - med);
  const double mad = median_of(dev);
  std::vector<bool> keep(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) keep[i] = v[i] <= med + 3.0 * mad && v[i] >= 0.25 * med;
  return keep;
}

std::vector<bool> filter_donors(const ExpressionTable& sender, const ExpressionTable& receiver) {
  if (sender.donors != receiver.donors) {
    throw ValidationError("filter_donors: tables must be donor-aligned");
  }
  const auto n = static_cast<std::size_t>(sender.library_size.size());
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);
  while (!active.empty()) {
    VectorXd ls(static_cast<Eigen::Index>(active.size())), lr(ls.size());
    for (std::size_t k = 0; k < active.size(); ++k) {
      ls(static_cast<Eigen::Index>(k)) = sender.library_size(static_cast<Eigen::Index>(active[k]));
      lr(static_cast<Eigen::Index>(k)) = receiver.library_size(static_cast<Eigen::Index>(active[k]));
    }
    const auto ks = library_size_mask(ls);
    const auto kr = library_size_mask(lr);
    std::vector<std::size_t> next;
    for (std::size_t k = 0; k < active.size(); ++k)
      if (ks[k] && kr[k]) next.push_back(active[k]);
    if (next.size() == active.size()) break;
    active = std::move(next);
  }
  if (active.empty()) throw DataError("library-size filter excluded every donor");
  std::vector<bool> mask(n, false);
  for (auto i : active) mask[i] = true;
  return mask;
}

ExpressionTable normalize_library_size(const ExpressionTable& t) {
  std::vector<double> v(t.library_size.data(), t.library_size.data() + t.library_size.size());
  const double med = median_of(v);
  ExpressionTable out = t;
  for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
    if (!(t.library_size(i) > 0.0)) {
      throw DataError("cannot normalize donor '" + t.donors[static_cast<std::size_t>(i)] +
                      "' with zero library size");
    }
    out.values.row(i) *= med / t.library_size(i);
  }
  return out;
}

// ---------------------------------------------------- instrument choice

InstrumentSelection select_instruments(const GenotypeTable& genotypes, const GeneLocus& gene,
                                       const VectorXd& expression, const MatrixXd& covariates,
                                       std::int64_t window, int max_count) {
  if (gene.promoter < 0 || gene.chrom.empty()) {
    throw DataError("missing promoter position for gene '" + gene.gene + "'");
  }
  const MatrixXd& D = genotypes.dosages.values;
  if (genotypes.snps.size() != static_cast<std::size_t>(D.cols())) {
    throw DataError("missing position metadata for genotype columns");
  }
  const Eigen::Index n = expression.size();
  if (D.rows() != n || (covariates.cols() > 0 && covariates.rows() != n)) {
    throw ValidationError("select_instruments: row count mismatch");
  }

  InstrumentSelection sel;
  std::vector<Eigen::Index> in_window;
  for (std::size_t j = 0; j < genotypes.snps.size(); ++j) {
    const SnpInfo& s = genotypes.snps[j];
    if (s.chrom == gene.chrom && std::llabs(s.position - gene.promoter) <= window)
      in_window.push_back(static_cast<Eigen::Index>(j));
  }
  if (in_window.empty()) {
    sel.reason = "no valid instruments for " + gene.gene + ": no SNP within the cis window";
    return sel;
  }

  // Partial out the intercept and covariates once, then score each dosage.
  MatrixXd Q(n, 1 + covariates.cols());
  Q.col(0).setOnes();
  if (covariates.cols() > 0) Q.rightCols(covariates.cols()) = covariates;
  const Eigen::ColPivHouseholderQR<MatrixXd> qr(Q);
  const Eigen::Index rank = qr.rank();
  auto residualize = [&](const VectorXd& v) -> VectorXd { return v - Q * qr.solve(v); };
  const double df = static_cast<double>(n - rank - 1);
  if (df < 1.0) throw DataError("too few donors to score instruments for '" + gene.gene + "'");
  const VectorXd re = residualize(expression);

  struct Scored {
    Eigen::Index col;
    double t;
  };
  std::vector<Scored> scored;
  for (Eigen::Index j : in_window) {
    const VectorXd d = D.col(j);
    const VectorXd rd = residualize(d);
    const double ssd = rd.squaredNorm();
    const double scale = (d.array() - d.mean()).matrix().squaredNorm();
    if (ssd <= 1e-10 * std::max(1.0, scale)) continue;
    const double b = rd.dot(re) / ssd;
    const double rss = (re - b * rd).squaredNorm();
    const double se = std::sqrt(rss / df / ssd);
    double t;
    if (se > 0.0) t = b / se;
    else t = b == 0.0 ? 0.0 : std::copysign(INFINITY, b);
    scored.push_back({j, t});
  }
  if (scored.empty()) {
    sel.reason = "no valid instruments for " + gene.gene + ": every cis SNP is constant";
    return sel;
  }
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    return std::abs(a.t) > std::abs(b.t);
  });
  const std::size_t keep = std::min<std::size_t>(scored.size(), static_cast<std::size_t>(std::max(0, max_count)));
  for (std::size_t k = 0; k < keep; ++k) {
    sel.columns.push_back(scored[k].col);
    sel.snps.push_back(genotypes.snps[static_cast<std::size_t>(scored[k].col)].id);
    sel.t_stats.push_back(scored[k].t);
  }
  return sel;
}

// ---------------------------------------------------- pathway activity

Association parse_association(const std::string& s) {
  const std::string l = lower(s);
  if (l == "pearson") return Association::Pearson;
  if (l == "spearman") return Association::Spearman;
  throw ValidationError("unknown association '" + s + "' (pearson, spearman)");
}

std::string to_string(Association a) {
  return a == Association::Pearson ? "pearson" : "spearman";
}

std::string to_string(Representation r) { return r == Representation::PC1 ? "pc1" : "mean"; }

double association(const VectorXd& a, const VectorXd& b, Association kind) {
  if (a.size() != b.size()) throw ValidationError("association: length mismatch");
  if (kind == Association::Spearman) return pearson(ranks(a), ranks(b));
  return pearson(a, b);
}

PathwayActivity pathway_activity(const MatrixXd& pathway, const VectorXd& ligand,
                                 Association kind) {
  const Eigen::Index n = pathway.rows();
  if (pathway.cols() == 0) throw ValidationError("pathway_activity: empty gene set");
  if (ligand.size() != n) throw ValidationError("pathway_activity: ligand length mismatch");
  if (n < 3) throw DataError("pathway_activity: need at least 3 donors");
  if (sample_sd(ligand) <= 0.0) throw DataError("pathway_activity: ligand expression is constant");

  PathwayActivity out;
  std::vector<VectorXd> cols;
  for (Eigen::Index j = 0; j < pathway.cols(); ++j) {
    const VectorXd c = pathway.col(j);
    const double sd = sample_sd(c);
    if (sd <= 1e-12 * std::max(1.0, std::abs(c.mean()))) continue;
    cols.push_back((c.array() - c.mean()) / sd);
    out.genes_used.push_back(j);
  }
  if (cols.empty()) throw DataError("pathway_activity: zero-variance pathway submatrix");
  MatrixXd Zs(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) Zs.col(static_cast<Eigen::Index>(j)) = cols[j];

  out.mean = Zs.rowwise().mean();
  const MatrixXd R = Zs.transpose() * Zs / static_cast<double>(n - 1);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(R);
  if (eig.info() != Eigen::Success) throw NumericalError("pathway_pc1", "eigen decomposition failed");
  const Eigen::Index top = R.cols() - 1;
  VectorXd v = eig.eigenvectors().col(top);
  out.pc1_variance_share = eig.eigenvalues()(top) / R.trace();
  out.pc1 = Zs * v;
  double orient = out.pc1.dot(out.mean);
  if (std::abs(orient) <= 1e-12 * out.pc1.norm() * std::max(1.0, out.mean.norm())) {
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    orient = v(k);
  }
  if (orient < 0.0) out.pc1 = -out.pc1;

  out.assoc_pc1 = association(out.pc1, ligand, kind);
  out.assoc_mean = association(out.mean, ligand, kind);
  if (std::abs(out.assoc_pc1) > std::abs(out.assoc_mean) + 1e-12) {
    out.chosen = Representation::PC1;
    out.values = out.pc1;
  } else {
    out.chosen = Representation::Mean;
    out.values = out.mean;
  }
  return out;
}

// ------------------------------------------------------------ screening

std::string TripletSpec::id() const { return ligand.gene + "|" + receptor.gene + "|" + pathway; }

std::string to_string(ScreenStatus s) {
  switch (s) {
    case ScreenStatus::Ok: return "ok";
    case ScreenStatus::Excluded: return "excluded";
    case ScreenStatus::Failed: return "failed";
  }
  return "?";
}

std::uint64_t triplet_seed(std::uint64_t master_seed, const TripletSpec& t) {
  return derive_seed({master_seed, hash_string(t.ligand.gene), hash_string(t.receptor.gene),
                      hash_string(t.pathway)});
}

const ExpressionTable& TableCache::expression(const std::filesystem::path& p) {
  std::lock_guard lock(mutex_);
  auto it = expr_.find(p);
  if (it == expr_.end()) it = expr_.emplace(p, read_expression_csv(p)).first;
  return it->second;
}

const NumericTable& TableCache::numeric(const std::filesystem::path& p) {
  std::lock_guard lock(mutex_);
  auto it = num_.find(p);
  if (it == num_.end()) it = num_.emplace(p, read_numeric_csv(p)).first;
  return it->second;
}

const std::vector<SnpInfo>& TableCache::snps(const std::filesystem::path& p) {
  std::lock_guard lock(mutex_);
  auto it = snp_.find(p);
  if (it == snp_.end()) it = snp_.emplace(p, read_snp_info(p)).first;
  return it->second;
}

Dataset assemble_triplet(const TripletSpec& t, TableCache& cache, const ScreenSettings& s,
                         ScreenResult& result) {
  result.triplet = t.id();
  const ExpressionTable& sender_raw = cache.expression(t.sender);
  const ExpressionTable& receiver_raw = cache.expression(t.receiver);
  const NumericTable& geno_raw = cache.numeric(t.genotypes);
  const auto& snp_info = cache.snps(t.snps);

  if (!sender_raw.gene_index(t.ligand.gene))
    throw ValidationError("ligand '" + t.ligand.gene + "' not in sender table");
  if (!receiver_raw.gene_index(t.receptor.gene))
    throw ValidationError("receptor '" + t.receptor.gene + "' not in receiver table");
  std::vector<std::string> present;
  for (const auto& g : t.pathway_genes)
    if (receiver_raw.gene_index(g)) present.push_back(g);
  if (present.empty()) throw ValidationError("no pathway gene of '" + t.pathway + "' in receiver table");

  std::vector<std::vector<std::string>> lists{sender_raw.donors, receiver_raw.donors, geno_raw.donors};
  std::vector<std::string> names{"sender", "receiver", "genotypes"};
  const NumericTable* cov_raw = nullptr;
  if (!t.covariate_columns.empty()) {
    if (t.covariates.empty()) throw DataError("covariate columns given without a covariate table");
    cov_raw = &cache.numeric(t.covariates);
    lists.push_back(cov_raw->donors);
    names.push_back("covariates");
  }
  const DonorAlignment aligned = align_donors(lists, names);

  ExpressionTable sender = subset_donors(sender_raw, aligned.donors);
  ExpressionTable receiver = subset_donors(receiver_raw, aligned.donors);
  const std::vector<bool> keep = filter_donors(sender, receiver);
  std::vector<std::string> donors;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) donors.push_back(aligned.donors[i]);
  sender = normalize_library_size(subset_donors(sender, donors));
  receiver = normalize_library_size(subset_donors(receiver, donors));
  const GenotypeTable geno = make_genotype_table(subset_donors(geno_raw, donors), snp_info);

  const auto n = static_cast<Eigen::Index>(donors.size());
  MatrixXd V(n, static_cast<Eigen::Index>(t.covariate_columns.size()));
  if (cov_raw) {
    const NumericTable cov = subset_donors(*cov_raw, donors);
    for (std::size_t k = 0; k < t.covariate_columns.size(); ++k) {
      const auto c = cov.column_index(t.covariate_columns[k]);
      if (!c) throw DataError("covariate column '" + t.covariate_columns[k] + "' not found");
      V.col(static_cast<Eigen::Index>(k)) = cov.values.col(*c);
    }
  }

  Dataset d;
  d.x = sender.values.col(*sender.gene_index(t.ligand.gene));
  d.z = receiver.values.col(*receiver.gene_index(t.receptor.gene));
  d.V = V;
  result.n_donors = static_cast<int>(n);

  const InstrumentSelection gx = select_instruments(geno, t.ligand, d.x, V, s.window, s.max_instruments);
  const InstrumentSelection gz = select_instruments(geno, t.receptor, d.z, V, s.window, s.max_instruments);
  result.n_instruments_ligand = static_cast<int>(gx.columns.size());
  result.n_instruments_receptor = static_cast<int>(gz.columns.size());
  if (gx.empty() || gz.empty()) {
    result.status = ScreenStatus::Excluded;
    result.reason = gx.empty() ? gx.reason : gz.reason;
    return {};
  }
  d.G = take_cols(geno.dosages.values, gx.columns);
  d.H = take_cols(geno.dosages.values, gz.columns);

  std::vector<Eigen::Index> pcols;
  for (const auto& g : present) pcols.push_back(*receiver.gene_index(g));
  const PathwayActivity pa = pathway_activity(take_cols(receiver.values, pcols), d.x, s.association);
  d.y = pa.values;
  result.representation = pa.chosen;
  d.validate();
  return d;
}

ScreenResult screen_triplet(const TripletSpec& t, TableCache& cache, const ScreenSettings& s) {
  ScreenResult r;
  r.triplet = t.id();
  try {
    const Dataset d = assemble_triplet(t, cache, s, r);
    if (r.status != ScreenStatus::Ok) return r;
    McmcSettings mcmc = s.mcmc;
    mcmc.seed = triplet_seed(s.master_seed, t);
    const CenteredDataset c = center_dataset(d);
    r.posterior = run_chain(c.data, Hyperparams::defaults(d.n()), mcmc);
    r.effects = standardize_effects(r.posterior.mean_beta_X, r.posterior.mean_beta_Z,
                                    r.posterior.mean_beta_XZ, d.x, d.z, d.y);
    r.sign_reversal = sign_reversal_threshold(r.effects);
  } catch (const NumericalError& e) {
    r.status = ScreenStatus::Failed;
    r.reason = r.triplet + ": " + e.step() + ": " + e.what();
  } catch (const std::exception& e) {
    r.status = ScreenStatus::Failed;
    r.reason = r.triplet + ": " + e.what();
  }
  return r;
}

// -------------------------------------------------------------- manifest

namespace {

using nlohmann::json;

GeneLocus parse_locus(const json& j, const std::string& what) {
  if (!j.is_object()) throw DataError("manifest: '" + what + "' must be an object");
  GeneLocus g;
  g.gene = j.at("gene").get<std::string>();
  if (j.contains("chrom")) {
    g.chrom = j.at("chrom").is_string() ? j.at("chrom").get<std::string>()
                                        : std::to_string(j.at("chrom").get<long long>());
  }
  if (j.contains("promoter")) g.promoter = j.at("promoter").get<std::int64_t>();
  return g;
}

}  // namespace

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  const std::filesystem::path base = path.parent_path();
  auto resolve = [&](const std::string& p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
  };

  Manifest m;
  try {
    if (j.contains("master_seed")) m.settings.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("mcmc")) {
      const json& mc = j.at("mcmc");
      if (mc.contains("iterations")) m.settings.mcmc.iterations = mc.at("iterations").get<int>();
      if (mc.contains("burn_in")) m.settings.mcmc.burn_in = mc.at("burn_in").get<int>();
      if (mc.contains("thin")) m.settings.mcmc.thin = mc.at("thin").get<int>();
    }
    if (j.contains("association"))
      m.settings.association = parse_association(j.at("association").get<std::string>());
    if (j.contains("window")) m.settings.window = j.at("window").get<std::int64_t>();
    if (j.contains("max_instruments")) m.settings.max_instruments = j.at("max_instruments").get<int>();

    const json tables = j.value("tables", json::object());
    std::vector<std::string> covs = j.value("covariates", std::vector<std::string>{});
    for (const json& tj : j.at("triplets")) {
      TripletSpec t;
      t.ligand = parse_locus(tj.at("ligand"), "ligand");
      t.receptor = parse_locus(tj.at("receptor"), "receptor");
      t.pathway = tj.at("pathway").get<std::string>();
      t.pathway_genes = tj.at("pathway_genes").get<std::vector<std::string>>();
      auto table = [&](const char* key) {
        if (tj.contains(key)) return resolve(tj.at(key).get<std::string>());
        if (tables.contains(key)) return resolve(tables.at(key).get<std::string>());
        return std::filesystem::path{};
      };
      t.sender = table("sender");
      t.receiver = table("receiver");
      t.genotypes = table("genotypes");
      t.snps = table("snps");
      t.covariates = table("covariates");
      t.covariate_columns = tj.value("covariate_columns", covs);
      if (t.sender.empty() || t.receiver.empty() || t.genotypes.empty() || t.snps.empty()) {
        throw DataError("triplet " + t.id() + " lacks a sender, receiver, genotypes or snps path");
      }
      m.triplets.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  m.settings.mcmc.validate();
  return m;
}

std::vector<ScreenResult> screen_manifest(const Manifest& m, int jobs) {
  TableCache cache;
  // Load every table up front so file errors surface before any chain runs.
  for (const auto& t : m.triplets) {
    cache.expression(t.sender);
    cache.expression(t.receiver);
    cache.numeric(t.genotypes);
    cache.snps(t.snps);
    if (!t.covariates.empty()) cache.numeric(t.covariates);
  }
  std::vector<ScreenResult> out(m.triplets.size());
  parallel_for(m.triplets.size(), jobs,
               [&](std::size_t i) { out[i] = screen_triplet(m.triplets[i], cache, m.settings); });
  std::stable_sort(out.begin(), out.end(),
                   [](const ScreenResult& a, const ScreenResult& b) { return a.triplet < b.triplet; });
  return out;
}

void write_screen_csv(std::ostream& out, const std::vector<ScreenResult>& rows) {
  write_csv_row(out, {"triplet", "status", "reason", "n_donors", "n_instr_ligand",
                      "n_instr_receptor", "representation", "pip", "beta_x", "beta_z",
                      "beta_xz", "beta_x_std", "beta_xz_std", "sd_x", "sd_z", "sd_y",
                      "sign_reversal_z", "n_kept"});
  for (const ScreenResult& r : rows) {
    const bool ok = r.status == ScreenStatus::Ok;
    auto num = [&](double v) { return ok ? format_double(v) : std::string("NA"); };
    std::string rev = "NA";
    if (ok) rev = r.sign_reversal ? format_double(*r.sign_reversal) : "unbounded";
    write_csv_row(out, {r.triplet, to_string(r.status), r.reason, std::to_string(r.n_donors),
                        std::to_string(r.n_instruments_ligand),
                        std::to_string(r.n_instruments_receptor),
                        ok ? to_string(r.representation) : "NA", num(r.posterior.pip),
                        num(r.posterior.mean_beta_X), num(r.posterior.mean_beta_Z),
                        num(r.posterior.mean_beta_XZ), num(r.effects.beta_X_std),
                        num(r.effects.beta_XZ_std), num(r.effects.sd_x), num(r.effects.sd_z),
                        num(r.effects.sd_y), rev,
                        ok ? std::to_string(r.posterior.n_kept) : "NA"});
  }
}

}  // namespace mrccc
