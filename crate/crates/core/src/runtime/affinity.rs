//! Thread-to-core binding.

use crate::error::{Error, Result};
use crate::topology::{Binding, CoreTopology};

/// Core id each thread is pinned to, or `None` when unbound.
///
/// Big-first pins the fastest type's threads first, each type's threads to
/// its cores in ascending order; small-first starts from the slowest type.
pub fn bind_threads(topo: &CoreTopology, binding: Binding) -> Result<Vec<Option<usize>>> {
    if binding == Binding::Unbound {
        return Ok(vec![None; topo.total_threads()]);
    }
    if !topo.has_core_ids() {
        return Err(Error::InvalidRuntime(format!(
            "binding {binding} requires core ids for every core type"
        )));
    }
    let order: Vec<usize> = match binding {
        Binding::BigFirst => (0..topo.type_count()).rev().collect(),
        Binding::SmallFirst => (0..topo.type_count()).collect(),
        Binding::Unbound => unreachable!(),
    };
    let mut map = Vec::with_capacity(topo.total_threads());
    for j in order {
        let ty = &topo.types()[j];
        let mut cores = ty.cores.clone();
        cores.sort_unstable();
        map.extend(cores.into_iter().take(ty.threads).map(Some));
    }
    Ok(map)
}

/// Pins the calling thread to `core`.
#[cfg(target_os = "linux")]
pub fn pin_current_thread(thread: usize, core: usize) -> Result<()> {
    if core >= libc::CPU_SETSIZE as usize {
        return Err(Error::Affinity {
            thread,
            core,
            reason: "core id exceeds CPU_SETSIZE".into(),
        });
    }
    // SAFETY: cpu_set_t is plain data; CPU_ZERO/CPU_SET only touch the set.
    let rc = unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_ZERO(&mut set);
        libc::CPU_SET(core, &mut set);
        libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set)
    };
    if rc != 0 {
        return Err(Error::Affinity {
            thread,
            core,
            reason: std::io::Error::last_os_error().to_string(),
        });
    }
    Ok(())
}

#[cfg(not(target_os = "linux"))]
pub fn pin_current_thread(_thread: usize, _core: usize) -> Result<()> {
    Err(Error::AffinityUnsupported(format!(
        "thread pinning is not implemented on {}",
        std::env::consts::OS
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::CoreType;

    fn odroid_like() -> CoreTopology {
        CoreTopology::new(vec![
            CoreType {
                name: "little".into(),
                threads: 4,
                cores: vec![0, 1, 2, 3],
                speed: 1.0,
            },
            CoreType {
                name: "big".into(),
                threads: 4,
                cores: vec![4, 5, 6, 7],
                speed: 2.0,
            },
        ])
        .unwrap()
    }

    #[test]
    fn big_first_and_small_first() {
        let topo = odroid_like();
        let bs = bind_threads(&topo, Binding::BigFirst).unwrap();
        assert_eq!(bs[0], Some(4));
        assert_eq!(bs[4], Some(0));
        let sb = bind_threads(&topo, Binding::SmallFirst).unwrap();
        assert_eq!(sb[0], Some(0));
        assert_eq!(sb[7], Some(7));
    }

    #[test]
    fn symmetric_is_identity() {
        let topo = CoreTopology::symmetric(4).unwrap();
        let map = bind_threads(&topo, Binding::BigFirst).unwrap();
        assert_eq!(map, vec![Some(0), Some(1), Some(2), Some(3)]);
        assert_eq!(bind_threads(&topo, Binding::Unbound).unwrap(), vec![None; 4]);
    }

    #[test]
    fn binding_needs_core_ids() {
        let topo = CoreTopology::from_counts(&[2, 2], &[1.0, 2.0]).unwrap();
        assert!(bind_threads(&topo, Binding::BigFirst).is_err());
    }

    #[cfg(target_os = "linux")]
    #[test]
    fn pin_to_core_zero() {
        std::thread::spawn(|| pin_current_thread(0, 0).unwrap()).join().unwrap();
        let err = std::thread::spawn(|| pin_current_thread(0, 100_000)).join().unwrap();
        assert!(err.is_err());
    }
}
