//! Local HTTP stub servers for client tests.

use std::net::TcpListener;

/// Serves `router` on an ephemeral local port from a background thread and
/// returns the base URL. The server lives until the test process exits.
pub(crate) fn serve(router: axum::Router) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub server");
    listener.set_nonblocking(true).expect("nonblocking listener");
    let url = format!("http://{}", listener.local_addr().expect("local addr"));
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()
            .expect("stub runtime");
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("tokio listener");
            axum::serve(listener, router).await.expect("stub server");
        });
    });
    url
}
