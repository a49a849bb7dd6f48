//! Advisory single-writer lock on the state directory: a `.lock` file
//! holding the owner's pid, removed on drop. Locks left behind by dead
//! processes are reclaimed.

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<DirLock, String> {
        fs::create_dir_all(dir).map_err(|e| format!("cannot open state directory: {e}"))?;
        let path = dir.join(".lock");
        for _ in 0..2 {
            match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut file) => {
                    let _ = write!(file, "{}", std::process::id());
                    return Ok(DirLock { path });
                }
                Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                    let holder = fs::read_to_string(&path).unwrap_or_default();
                    if holder_alive(holder.trim()) {
                        return Err(format!(
                            "state directory is locked by pid {}",
                            holder.trim()
                        ));
                    }
                    // Stale lock from a dead process; reclaim and retry.
                    let _ = fs::remove_file(&path);
                }
                Err(e) => return Err(format!("cannot lock state directory: {e}")),
            }
        }
        Err("state directory lock is contended".into())
    }
}

fn holder_alive(pid: &str) -> bool {
    match pid.parse::<u32>() {
        Ok(pid) => Path::new("/proc").join(pid.to_string()).exists(),
        Err(_) => false,
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
