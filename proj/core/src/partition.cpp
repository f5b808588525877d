#include "mlm/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mlm/rng.hpp"

namespace mlm {

LayerClusterings layer_cells(const MlpModel& model, const Dataset& train,
                             const std::vector<int>& k_per_layer,
                             std::uint64_t seed) {
  const int hidden = model.hidden_layers();
  if (static_cast<int>(k_per_layer.size()) != hidden)
    throw MlmError(Err::DimensionMismatch,
                   "k_per_layer must have one entry per hidden layer");
  for (int k : k_per_layer) {
    if (k < 1) throw MlmError(Err::InvalidArgument, "K_l must be >= 1");
    if (k > train.n())
      throw MlmError(Err::TooFewPoints, "K_l exceeds sample count");
  }

  std::vector<Eigen::MatrixXd> activations =
      hidden_outputs_rows(model, train.x);

  LayerClusterings out;
  out.k_per_layer = k_per_layer;
  for (int l = 0; l < hidden; ++l) {
    out.per_layer.push_back(fit_gmm(
        activations[static_cast<size_t>(l)], k_per_layer[static_cast<size_t>(l)],
        CovKind::Full, derive_seed(seed, {0x6C61u, static_cast<std::uint64_t>(l)})));
  }
  return out;
}

std::uint64_t lexicographic_rank(const std::vector<int>& sequence,
                                 const std::vector<int>& k_per_layer) {
  if (sequence.size() != k_per_layer.size())
    throw MlmError(Err::DimensionMismatch, "sequence length mismatch");
  std::uint64_t rank = 0;
  for (size_t l = 0; l < sequence.size(); ++l) {
    rank = rank * static_cast<std::uint64_t>(k_per_layer[l]) +
           static_cast<std::uint64_t>(sequence[l]);
  }
  return rank;
}

CellPartition assign_cells(const LayerClusterings& layers,
                           const MlpModel& model, const Dataset& data) {
  const int hidden = model.hidden_layers();
  if (static_cast<int>(layers.per_layer.size()) != hidden)
    throw MlmError(Err::DimensionMismatch,
                   "clusterings do not match the model depth");
  const Eigen::Index n = data.n();

  std::vector<Eigen::MatrixXd> activations =
      hidden_outputs_rows(model, data.x);

  std::vector<GmmEvaluator> evals;
  evals.reserve(layers.per_layer.size());
  for (const auto& g : layers.per_layer) evals.emplace_back(g);

  std::vector<std::vector<int>> sequences(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<int> seq(static_cast<size_t>(hidden));
    for (int l = 0; l < hidden; ++l)
      seq[static_cast<size_t>(l)] = evals[static_cast<size_t>(l)].map_assign(
          activations[static_cast<size_t>(l)].row(i).transpose());
    sequences[static_cast<size_t>(i)] = std::move(seq);
  }

  std::uint64_t total = 1;
  for (int k : layers.k_per_layer) total *= static_cast<std::uint64_t>(k);

  // Occupied ranks in increasing order become the compact ids.
  std::map<std::uint64_t, int> id_of_rank;
  std::vector<std::uint64_t> rank_of_sample(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uint64_t r =
        lexicographic_rank(sequences[static_cast<size_t>(i)], layers.k_per_layer);
    rank_of_sample[static_cast<size_t>(i)] = r;
    id_of_rank.emplace(r, 0);
  }
  int next = 0;
  for (auto& [rank, id] : id_of_rank) id = next++;

  CellPartition part;
  part.total_sequences = total;
  part.cell_of_sample.resize(n);
  part.sequence_of_cell.resize(static_cast<size_t>(next));
  part.cell_counts.assign(static_cast<size_t>(next), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int id = id_of_rank[rank_of_sample[static_cast<size_t>(i)]];
    part.cell_of_sample[i] = id;
    part.sequence_of_cell[static_cast<size_t>(id)] =
        sequences[static_cast<size_t>(i)];
    ++part.cell_counts[static_cast<size_t>(id)];
  }
  return part;
}

CoSupervisedSet cosupervise(const Eigen::MatrixXd& member_x,
                            const Eigen::VectorXd& member_y,
                            const MlpModel& model, int m, double epsilon,
                            std::uint64_t seed,
                            const std::vector<bool>* perturb) {
  if (member_x.rows() == 0)
    throw MlmError(Err::EmptyCell, "cosupervise over an empty cell");
  if (member_x.rows() != member_y.size())
    throw MlmError(Err::DimensionMismatch, "member x/y size mismatch");
  if (m < 0) throw MlmError(Err::InvalidArgument, "m must be >= 0");
  if (epsilon < 0) throw MlmError(Err::InvalidArgument, "epsilon must be >= 0");
  if (perturb && static_cast<Eigen::Index>(perturb->size()) != member_x.cols())
    throw MlmError(Err::DimensionMismatch, "perturb mask size mismatch");

  const Eigen::Index nk = member_x.rows();
  const Eigen::Index p = member_x.cols();

  CoSupervisedSet set;
  set.n_original = nk;
  set.x.resize(nk + m, p);
  set.y.resize(nk + m);
  set.x.topRows(nk) = member_x;
  set.y.head(nk) = member_y;

  Eigen::VectorXd mean = member_x.colwise().mean();
  const double sd = std::sqrt(epsilon);

  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd v = mean;
    if (sd > 0.0) {
      for (Eigen::Index j = 0; j < p; ++j) {
        double noise = gauss(rng) * sd;
        if (!perturb || (*perturb)[static_cast<size_t>(j)]) v[j] += noise;
      }
    }
    double pred = mlp_predict(model, v);
    if (model.output_link == OutputLink::Sigmoid) pred = pred >= 0.5 ? 1.0 : 0.0;
    set.x.row(nk + i) = v.transpose();
    set.y[nk + i] = pred;
  }
  return set;
}

}  // namespace mlm
