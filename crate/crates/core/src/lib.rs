//! Two-phase drone routing on classical hardware.
//!
//! Visiting points are first split into two clusters with a simulated QAOA
//! MaxCut, each cluster gets a depot, and one route per cluster is then
//! optimized from a node-based binary model. Routing models are solved by a
//! portfolio of annealing threads backed by exact oracles (brute force,
//! Held-Karp) that double as verification references.
//!
//! ```no_run
//! use q4dr_core::instance::{generate_instance, GeneratorConfig, UseCase};
//! use q4dr_core::pipeline::{solve_pipeline, PipelineConfig};
//!
//! let inst = generate_instance(UseCase::Uc1, 12, 7, &GeneratorConfig::default()).unwrap();
//! let sol = solve_pipeline(&inst, &PipelineConfig::default()).unwrap();
//! println!("total cost {:.1} m", sol.total_cost);
//! ```

pub mod assignment;
pub mod bench;
pub mod bits;
pub mod geojson;
pub mod instance;
pub mod pipeline;
pub mod qaoa;
pub mod registry;
pub mod route_model;
pub mod solvers;
pub mod statevector;

pub use bits::Bitstring;
pub use instance::{CostMatrix, GeoPoint, Instance, UseCase};
pub use registry::Registry;
