#pragma once

#include <string>
#include <vector>

#include "lf/measure.hpp"
#include "lf/staircase.hpp"
#include "lf/synth.hpp"

namespace lf {

/// Rank-drop staircase for A of rank m (m <= rank bound declared by the caller),
/// conjugated by the singular vectors of A.
StaircaseSpec stage1_spec(const Mat& A, int m, double tol = 1e-10);

/// Four-atom laminate in L for a rank-one A (Dirac for A = 0).
Measure stage2_laminate(const Mat& A, double tol = 1e-10);

/// Swaps the block rows and fixes the determinant sign: maps L2 to L1 and keeps det.
Mat l2_to_l1(const Mat& X);
Mat l1_to_l2(const Mat& Y);

struct Stage3Plan {
  int block = 1;  // 1: A in L1, 2: A in L2 (handled through l2_to_l1)
  Mat A;
  Mat R, D, Q;       // L1 image of A = R D Q^T
  Measure presplit;  // laminate on D with atoms in D_{>=2}, certified
  /// det1 staircases on the presplit atoms, in D coordinates
  std::vector<StaircaseSpec> corners;
  /// D coordinates -> coordinates of A
  Mat to_A(const Mat& X) const;
};

Stage3Plan stage3_spec(const Mat& A, double tol = 1e-9);
/// presplit composed with det1 truncations (beta_N < beta_tol, |A_N| >= t_cover), mapped back to A.
Measure stage3_measure(const Stage3Plan& plan, double beta_tol, double t_cover = 0, int jobs = 0);

struct PipelineOptions {
  double beta_tol = 1e-4;
  double t_cover = 0;
  bool stage1 = true;
  double member_tol = 1e-8;
  int jobs = 0;
};

/// Certified measure from delta_A through stage 1 (m = 2n..2), stage 2 and stage 3.
/// Staircase remainders stay flagged and pass through later stages unchanged.
Measure product_measure(const Mat& A, const PipelineOptions& opt);

struct PipelineReport {
  int n = 0;
  double good_mass = 0;      // mass in L cap Sigma at member_tol
  double residual_mass = 0;  // flagged staircase remainders
  double other_mass = 0;     // neither
  double residual_budget = 0;
  double barycenter_error = 0;
  bool support_ok = true;  // every unflagged atom in L cap Sigma
  double best_constant = 0;  // sup t^2n tail / (1 + |A|^2n)
  double slope = 0;          // log-log tail slope on [t0, t1]
  double t0 = 10, t1 = 1000;
  std::size_t atoms = 0;
  TailReport tails;
};

PipelineReport pipeline_report(const Mat& A, const Measure& nu, const PipelineOptions& opt, double t0 = 10,
                               double t1 = 1000);

/// Map mode: exact recursion with the measure pipeline as step builder.
PiecewiseAffineMap product_map(const Mat& A, const Domain& domain, const Vec& b, double delta, double alpha, int K,
                               double r, const PipelineOptions& opt, ReduceReport& report);

/// Step builder from the pipeline: trees of product_measure(G) with their fitted constant
/// sup t^p tail / (1 + |G|^growth).
StepBuilder pipeline_builder(const PipelineOptions& opt, double p, double growth);
/// Stage 3 alone for split seeds; other seeds (patches of error pieces) go through the pipeline.
StepBuilder stage3_builder(const PipelineOptions& opt, double p, double growth);

struct ApproxReport {
  int j = 0;
  double s = 0;               // s_j = 2n + j
  double error_moment = 0;    // integral over error pieces of 1 + |X|^s, per unit volume
  double error_budget = 0;    // 2^-j
  double inductive_volume = 0;
  double residual_volume = 0;
  double dist_L1 = 0, dist_L2 = 0;  // integrals of dist(grad u, L_i), per unit volume
  double dist_floor = 0;            // min_i dist(A, L_i)
  double best_constant = 0;         // sup t^2n tail / (1 + |A|^2n) of the map distribution
  double slope = 0;
  double holder_bound = 0;
  MapReport map;
  bool pass = true;
};

/// Stage 2 followed by stage 3 for a rank-one A outside L, realized with moment exponent
/// s_j = 2n + j and budgets 2^-j.
PiecewiseAffineMap approximate_sequence(const Mat& A, const Domain& domain, const Vec& b, int j, double alpha,
                                        const PipelineOptions& opt, ApproxReport& report);

}  // namespace lf
