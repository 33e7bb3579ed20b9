/*
 * Copyright 2026 The hklab Authors. All rights reserved.
 * This file is licensed to you under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License. You may obtain a copy
 * of the License at http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software distributed under
 * the License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR REPRESENTATIONS
 * OF ANY KIND, either express or implied. See the License for the specific language
 * governing permissions and limitations under the License.
 */
#pragma once

#include <hklab/geometry.hpp>
#include <hklab/heat.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace hklab::ym {

enum class Group { U1, SU2 };
enum class BoundaryMode { Relative, Absolute };

std::string to_string(Group g);
std::string to_string(BoundaryMode m);
Group group_from_string(const std::string& s);
BoundaryMode mode_from_string(const std::string& s);

/// |X|^2_g = norm_factor * |X|^2 with -trace(XY) on 1x1 (U1) or 2x2 (SU2) complex matrices.
double norm_factor(Group g);

/// Unit quaternion. U1 lives on the i-axis circle.
struct Quat
{
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 vec() const { return {x, y, z}; }
};

Quat operator*(const Quat& a, const Quat& b);
Quat inverse(const Quat& q);
Quat exp_algebra(const Vec3& v);
/// Principal logarithm; rotation angle |result| in [0, pi].
Vec3 log_algebra(const Quat& q);
/// q v q^{-1}.
Vec3 adjoint(const Quat& q, const Vec3& v);
Quat normalized(const Quat& q, Group g);

struct LatticeConnection
{
    std::shared_ptr<const geometry::Mesh> mesh;
    Group group = Group::U1;
    /// Element transporting the fibre at edge.b to edge.a, one per stored edge.
    std::vector<Quat> links;

    const geometry::Mesh& m() const { return *mesh; }
    /// Element of the edge traversed with orientation sign (+1 stored, -1 reversed).
    Quat oriented(int edge, int sign) const { return sign > 0 ? links[edge] : inverse(links[edge]); }
};

LatticeConnection identity_connection(std::shared_ptr<const geometry::Mesh> mesh, Group g);

/// i.i.d. links exp(amplitude * xi * n), xi uniform in [-1, 1], n a unit generator.
LatticeConnection random_connection(std::shared_ptr<const geometry::Mesh> mesh, Group g, double amplitude,
                                    std::uint64_t seed);

/// Links integrated from a seeded low-mode potential that satisfies the chosen boundary
/// condition at the continuum level.
LatticeConnection smooth_random_connection(std::shared_ptr<const geometry::Mesh> mesh, Group g,
                                           BoundaryMode mode, double amplitude, std::uint64_t seed,
                                           int modes = 3);

/// Links of the U1 potential A = b x dy on a cylinder: constant curvature b.
LatticeConnection constant_curvature_u1(std::shared_ptr<const geometry::Mesh> mesh, double b, double a = 0.0);

/// U(e) -> g(a) U(e) g(b)^{-1}.
LatticeConnection gauge_transform(const LatticeConnection& c, const std::vector<Quat>& g);

Quat plaquette_holonomy(const LatticeConnection& c, int p);

struct CurvatureField
{
    std::vector<Vec3> F;
    std::vector<int> flagged;
};

/// F(P) = log(holonomy) / area. Throws when a holonomy sits at the log branch cut.
CurvatureField plaquette_curvature(const LatticeConnection& c);
/// Same, but returns the flagged plaquettes instead of throwing.
CurvatureField plaquette_curvature_unchecked(const LatticeConnection& c);

double yang_mills_energy(const LatticeConnection& c);
double yang_mills_energy(const LatticeConnection& c, const CurvatureField& F);

/// q = |F|^2_E at vertices: dual-cell weighted average of incident plaquettes, summed over planes.
Eigen::VectorXd curvature_density(const LatticeConnection& c, const CurvatureField& F);
Eigen::VectorXd curvature_density(const LatticeConnection& c);
double curvature_sup(const LatticeConnection& c);

/// Links held fixed by the flow: boundary-tangential links under Relative (Dirichlet data
/// for the tangential part of the connection).
std::vector<std::uint8_t> frozen_links(const geometry::Mesh& mesh, BoundaryMode mode);

/// Relative: sets boundary-tangential links of 3-D meshes to the identity (flat boundary
/// face). Absolute: all links stay free; the mirror ghost layer is implicit.
LatticeConnection apply_boundary_conditions(const LatticeConnection& c, BoundaryMode mode);

/// Relative: max |F| over plaquettes inside the boundary face. Absolute: max |F_in + F_ghost|
/// over boundary-normal plaquettes paired with their mirrored ghosts.
double bc_residual(const LatticeConnection& c, BoundaryMode mode);

/// Largest stable explicit step (Gershgorin bound of the linearised flow).
double cfl_limit(const geometry::Mesh& mesh);
/// min(h^2 / 8, cfl_limit / 2).
double default_flow_dt(const geometry::Mesh& mesh);

/// Gradient of YM / 2 with respect to each link in the edge metric; this is d*F on the edge.
std::vector<Vec3> energy_gradient(const LatticeConnection& c, const CurvatureField& F,
                                  const std::vector<std::uint8_t>& frozen);

struct FlowState
{
    double t = 0.0;
    LatticeConnection conn;
    BoundaryMode mode = BoundaryMode::Absolute;
    double energy = 0.0;
    std::vector<std::uint8_t> frozen;
};

FlowState make_flow_state(const LatticeConnection& c, BoundaryMode mode);

struct StepReport
{
    double dt = 0.0;
    double energy_before = 0.0;
    double energy_after = 0.0;
    double bc_residual = 0.0;
    /// Energy increase above 1e-12.
    bool descent_violation = false;
};

/// One explicit Euler step of d/dt A = -1/2 d*F: U <- exp(-dt/2 d*F) U.
StepReport flow_step(FlowState& s, double dt);

struct TraceRow
{
    double t = 0.0;
    double energy = 0.0;
    double sup_q = 0.0;
    double min_dq_dnu = 0.0;
    double max_dq_dnu = 0.0;
    double bc_residual = 0.0;
};

struct FlowHistory
{
    std::vector<double> times;
    std::vector<Eigen::VectorXd> q;
    std::vector<double> energy;

    /// q at time t; throws naming the nearest stored time when absent.
    const Eigen::VectorXd& q_at(double t) const;
};

struct FlowRun
{
    std::vector<TraceRow> trace;
    FlowHistory history;
    FlowState final_state;
    int descent_violations = 0;
    double worst_increase = 0.0;
    double worst_bc_residual = 0.0;
};

/// Runs `steps` steps of size dt, recording trace rows and q snapshots every `record_every`
/// steps (including t = 0).
FlowRun run_flow(FlowState s, int steps, double dt, int record_every = 1);

/// Outward normal derivative of q at boundary vertices. Rejects non-convex meshes.
Eigen::VectorXd boundary_normal_derivative_of_q(const LatticeConnection& c);

std::string energy_trace_csv(const std::vector<TraceRow>& rows);
void write_flow_snapshot(const std::string& path, const FlowState& s);
FlowState read_flow_snapshot(const std::string& path, std::shared_ptr<const geometry::Mesh> mesh);

// ---- Lie-algebra valued cubical forms (product meshes) ----

using Form = std::vector<Vec3>;

class FormComplex
{
public:
    explicit FormComplex(std::shared_ptr<const geometry::Mesh> mesh);

    struct Cell
    {
        int base = 0;
        unsigned mask = 0;
        double volume = 0.0;
    };

    int dim() const { return m_dim; }
    int count(int p) const { return static_cast<int>(m_cells[p].size()); }
    const std::vector<Cell>& cells(int p) const { return m_cells[p]; }
    int find(int base, unsigned mask) const;

    /// Covariant exterior derivative of a p-form.
    Form d(const LatticeConnection& c, int p, const Form& a) const;
    /// Formal adjoint of d applied to a (p+1)-form, with the boundary flux removed.
    Form d_star(const LatticeConnection& c, int p_plus_1, const Form& b) const;
    /// Boundary measure times extrapolated interior product with the outward normal, on p-cells.
    Form boundary_flux(const LatticeConnection& c, int p_plus_1, const Form& b) const;

    double inner(Group g, int p, const Form& a, const Form& b) const;
    /// Same sum with |<a, b>| per cell.
    double inner_abs(Group g, int p, const Form& a, const Form& b) const;
    /// Boundary integral of <phi, iota_nu psi>, assembled from boundary vertices.
    double boundary_term(const LatticeConnection& c, int p, const Form& phi, const Form& psi) const;

    /// Curvature as a 2-form.
    Form curvature_form(const LatticeConnection& c) const;

private:
    Vec3 transport(const LatticeConnection& c, int v, int axis, const Vec3& x) const;
    Vec3 transport_back(const LatticeConnection& c, int v, int axis, const Vec3& x) const;
    Vec3 normal_trace(const LatticeConnection& c, int v, unsigned mask, int p_plus_1, const Form& b) const;
    double boundary_measure(int v, unsigned mask) const;

    std::shared_ptr<const geometry::Mesh> m_mesh;
    int m_dim = 2;
    std::vector<std::vector<Cell>> m_cells;
    std::vector<int> m_index; // (v << dim | mask) -> index within degree
};

double int_parts_residual(const FormComplex& fc, const LatticeConnection& c, int p, const Form& phi,
                          const Form& psi);

struct MonotIdentities
{
    double lhs[3] = {0, 0, 0};
    double rhs[3] = {0, 0, 0};
    /// Integral of the absolute LHS integrand; residuals are |lhs - rhs| / scale.
    double scale[3] = {0, 0, 0};
    double residual[3] = {0, 0, 0};
};

/// The three pairings behind the monotonicity lemma for phi = F and a positive Neumann
/// function f. Rejects f whose boundary normal derivative is not small.
MonotIdentities monot_identities_check(const FormComplex& fc, const LatticeConnection& c,
                                       const Eigen::VectorXd& f);

// ---- Functionals along the flow ----

/// zeta(t) = integral of q(r - t, .) g(t, ., y); kernel carries g at time t.
double zeta_functional(const FlowHistory& h, const heat::TimeField& kernel, const geometry::Mesh& mesh,
                       double r, double t);

struct MonotonicityReport
{
    /// Smallest constant u with C3 = 0, and smallest C3 with u = 0.
    double u_bar = 0.0;
    double C3 = 0.0;
    double worst_slack = 0.0;
    int pairs = 0;
    bool finite = true;
};

MonotonicityReport monotonicity_check(const geometry::Mesh& mesh, const std::vector<double>& t,
                                      const std::vector<double>& zeta, double ym0);

struct BochnerReport
{
    Eigen::VectorXd lhs;
    double C2 = 0.0;
    double max_lhs = 0.0;
    int points = 0;
};

/// (dq/dt - Laplacian q / 2) at snapshot k by central differences; C2 fitted over q > 1e-3 max q.
BochnerReport bochner_residual(const FlowHistory& h, const geometry::Mesh& mesh, size_t k);

} // namespace hklab::ym
