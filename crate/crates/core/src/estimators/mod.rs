//! Objectives built on the quadratic-form primitive.

mod bilinear;
mod hamiltonian;
mod network;
mod probes;
mod trace;

pub use bilinear::{BilinearReport, bilinear_form, bilinear_gradient, polarization_terms};
pub use hamiltonian::{
    DatasetConfig, GradientSource, HamiltonianDataset, HamiltonianSample, LossAndGrad, Optimizer,
    TrainConfig, TrainRecord, generate_dataset, hamiltonian_loss, hamiltonian_loss_and_grad,
    hamiltonian_loss_and_grad_dense, hamiltonian_train, perturbed_start,
};
pub use network::{
    SensitivityKind, SensitivityQuery, dense_network_sensitivity, dense_network_sensitivity_with,
    network_sensitivity, network_sensitivity_affine, network_sensitivity_with_config,
};
pub use probes::{ProbeConfig, ProbeDistribution};
pub use trace::{
    TraceEstimate, probe_gradient, probe_quadrature, trace_estimate, trace_gradient,
};
